"""Command-line entry points for the whole pipeline.

Exit codes: 0 success, 1 domain error (machine-readable JSON on stderr),
2 usage error.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import fixtures
from .contact import classify_state, feasible_cone
from .encoder import encode, load_recording, save_recording
from .errors import InvalidInputError, LfoError
from .grasp import (
    ClosureType,
    GripperSpec,
    SuperquadricParams,
    compute_contact_web,
    fit_superquadric,
    random_superquadric,
    sample_cloud,
)
from .laban import (
    SkeletonFrame,
    columns_by_name,
    detect_pauses,
    encode_skeleton,
    parse_score,
    serialize_score,
)
from .taskmodel import canonical_json, parse_program, serialize_program, validate_gmr
from .decoder_sim import (
    BUNDLED_ROBOTS,
    parse_trace,
    robot_from_dict,
    run_program,
    verify_postconditions,
    world_from_dict,
)


def domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except LfoError as e:
            click.echo(json.dumps(e.payload(), sort_keys=True), err=True)
            sys.exit(1)
    return wrapper


@click.group()
def main():
    """Learning-from-observation pipeline: encode demonstrations into task-model
    programs, review them, and execute them on simulated robots."""


# ---------------------------------------------------------------------------
# encode / validate


@main.command("encode")
@click.argument("recording", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
@domain_errors
def encode_cmd(recording, output):
    """Compile a demonstration recording into a task-model program."""
    rec = load_recording(recording)
    program = encode(rec)
    Path(output).write_text(serialize_program(program), encoding="utf-8")
    click.echo(f"wrote {output} ({len(program.frames)} frames)")


@main.command("validate")
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@domain_errors
def validate_cmd(program):
    """Check a program file against the GMR grammar and slot schemas."""
    prog = parse_program(Path(program).read_text(encoding="utf-8"))
    violations = validate_gmr(prog.frames)
    if violations:
        payload = {"error": "grammar", "violations": [str(v) for v in violations]}
        click.echo(json.dumps(payload, sort_keys=True), err=True)
        sys.exit(1)
    click.echo(f"{program}: ok ({len(prog.frames)} frames)")


# ---------------------------------------------------------------------------
# simulate / verify


def _load_robot(name_or_path: str):
    if name_or_path in BUNDLED_ROBOTS:
        return BUNDLED_ROBOTS[name_or_path]
    path = Path(name_or_path)
    if not path.exists():
        raise InvalidInputError(
            f"robot {name_or_path!r} is neither a bundled name "
            f"({', '.join(sorted(BUNDLED_ROBOTS))}) nor a file")
    return robot_from_dict(json.loads(path.read_text(encoding="utf-8")))


@main.command("simulate")
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@click.argument("world", type=click.Path(exists=True, dir_okay=False))
@click.argument("robot")
@click.option("--trace", "trace_out", type=click.Path(dir_okay=False),
              help="write the execution trace (NDJSON)")
@domain_errors
def simulate_cmd(program, world, robot, trace_out):
    """Execute a program in a world file on a robot (bundled name or spec file)."""
    prog = parse_program(Path(program).read_text(encoding="utf-8"))
    world_state = world_from_dict(json.loads(Path(world).read_text(encoding="utf-8")))
    robot_spec = _load_robot(robot)
    try:
        trace, final = run_program(prog, world_state, robot_spec)
    except LfoError as e:
        if trace_out and getattr(e, "trace", None) is not None:
            Path(trace_out).write_text(e.trace.export_lines(), encoding="utf-8")
        raise
    if trace_out:
        Path(trace_out).write_text(trace.export_lines(), encoding="utf-8")
    report = verify_postconditions(trace, prog)
    for v in report.verdicts:
        click.echo(f"frame {v.frame_index} {v.task}: {v.status}"
                   + (f" ({v.detail})" if v.detail else ""))
    for name, obj in final.objects.items():
        att = obj.attachment
        where = f"{att.kind}" + (f"({att.surface})" if att.surface else "")
        click.echo(f"object {name}: {where} at "
                   f"{[round(float(x), 4) for x in obj.shape.translation]}")
    if not report.ok:
        sys.exit(1)


@main.command("verify")
@click.argument("trace", type=click.Path(exists=True, dir_okay=False))
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@domain_errors
def verify_cmd(trace, program):
    """Re-check a recorded trace's contact-state transitions against a program."""
    tr = parse_trace(Path(trace).read_text(encoding="utf-8"))
    prog = parse_program(Path(program).read_text(encoding="utf-8"))
    report = verify_postconditions(tr, prog)
    for v in report.verdicts:
        click.echo(f"frame {v.frame_index} {v.task}: {v.status}"
                   + (f" ({v.detail})" if v.detail else ""))
    if not report.ok:
        sys.exit(1)


# ---------------------------------------------------------------------------
# laban


@main.group("laban")
def laban_group():
    """Labanotation scores."""


@laban_group.command("encode")
@click.argument("recording", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
@domain_errors
def laban_encode_cmd(recording, output):
    """Encode a recording's skeleton track into a score at its pauses."""
    rec = load_recording(recording)
    pauses = [rec.t_start + p for p in detect_pauses(rec.activity_signal())]
    frames = [SkeletonFrame(f.timestamp, f.joints) for f in rec.frames]
    cols = columns_by_name(["right-elbow", "right-wrist", "left-elbow", "left-wrist"])
    score = encode_skeleton(frames, pauses, cols)
    Path(output).write_text(serialize_score(score), encoding="utf-8")
    click.echo(f"wrote {output} ({len(score.rows)} rows)")


@laban_group.command("show")
@click.argument("score", type=click.Path(exists=True, dir_okay=False))
@domain_errors
def laban_show_cmd(score):
    """Pretty-print a score file (time flows bottom to top)."""
    s = parse_score(Path(score).read_text(encoding="utf-8"))
    width = max(len(c) for c in s.columns) + 2
    header = "t".rjust(8) + "".join(c.rjust(width) for c in s.columns)
    lines = []
    for row in s.rows:
        cells = "".join(row.symbol(c).direction.token.rjust(width) for c in s.columns)
        lines.append(f"{row.time:8.2f}{cells}")
    for line in reversed(lines):
        click.echo(line)
    click.echo(header)


# ---------------------------------------------------------------------------
# superquadrics


@main.group("sq")
def sq_group():
    """Superquadric shape tools."""


def _params_to_doc(q: SuperquadricParams, rms=None) -> dict:
    doc = {"a": list(q.a), "e": list(q.e),
           "rotation": [list(r) for r in q.rotation],
           "translation": list(q.translation)}
    if rms is not None:
        doc["rms"] = rms
    return doc


@sq_group.command("fit")
@click.argument("cloud", type=click.Path(exists=True, dir_okay=False))
@domain_errors
def sq_fit_cmd(cloud):
    """Recover superquadric parameters from an `x y z` point cloud file."""
    pts = np.loadtxt(cloud)
    result = fit_superquadric(pts, full_result=True)
    click.echo(canonical_json(_params_to_doc(result.params, result.rms)), nl=False)


@sq_group.command("gen")
@click.option("--seed", type=int, default=0)
@click.option("--n", type=int, default=500)
@click.option("--randomize", is_flag=True,
              help="draw shape/size/view from the randomization ranges")
@click.option("--noise", type=float, default=0.0)
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
@domain_errors
def sq_gen_cmd(seed, n, randomize, noise, output):
    """Generate a visible-side surface cloud (deterministic per seed)."""
    rng = np.random.default_rng(seed)
    if randomize:
        q = random_superquadric(rng)
        az = float(rng.uniform(-120, 120))
        zen = float(rng.uniform(0, 90))
    else:
        q = SuperquadricParams((0.10, 0.08, 0.14), (0.6, 0.9))
        az, zen = 30.0, 50.0
    cloud = sample_cloud(q, az, zen, n, noise_sigma=noise, seed=seed)
    np.savetxt(output, cloud, fmt="%.6f")
    click.echo(canonical_json({"params": _params_to_doc(q),
                               "view": {"azimuth_deg": az, "zenith_deg": zen},
                               "points": len(cloud), "file": str(output)}), nl=False)


@sq_group.command("web")
@click.argument("params", type=click.Path(exists=True, dir_okay=False))
@click.option("--closure", type=click.Choice([c.value for c in ClosureType]),
              default=ClosureType.PASSIVE_FORCE.value)
@click.option("--span", type=float, default=GripperSpec().span,
              help="gripper span in meters")
@domain_errors
def sq_web_cmd(params, closure, span):
    """Compute a contact web for fitted parameters (object frame)."""
    doc = json.loads(Path(params).read_text(encoding="utf-8"))
    q = SuperquadricParams(tuple(doc["a"]), tuple(doc["e"]),
                           tuple(map(tuple, doc.get("rotation", np.eye(3).tolist()))),
                           tuple(doc.get("translation", (0, 0, 0))))
    web = compute_contact_web(q, ClosureType(closure), GripperSpec(span=span))
    out = {"closure": web.closure.value,
           "contacts": [{"point": list(p), "inward_normal": list(n)}
                        for p, n in web.contacts],
           "approach": list(web.approach)}
    click.echo(canonical_json(out), nl=False)


# ---------------------------------------------------------------------------
# contact


@main.group("contact")
def contact_group():
    """Contact-state analysis."""


@contact_group.command("classify")
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@domain_errors
def contact_classify_cmd(scenario):
    """Classify each contact configuration in a scenario file."""
    doc = json.loads(Path(scenario).read_text(encoding="utf-8"))
    if doc.get("kind") != "contact-scenarios":
        raise InvalidInputError("not a contact-scenarios document")
    for entry in doc.get("entries", []):
        cone = feasible_cone(entry.get("normals", []))
        gens = [[round(float(x), 6) for x in g] for g in cone.generators]
        click.echo(f"{entry.get('name', '?')}: {classify_state(cone).value} "
                   f"(span {cone.span_dim}, lineality {cone.lineality_dim}) "
                   f"generators {gens}")


# ---------------------------------------------------------------------------
# fixtures / serve


@main.command("demo")
@click.argument("name", type=click.Choice(sorted(fixtures.DEMOS)))
@click.option("--out-dir", type=click.Path(file_okay=False), default=".")
@domain_errors
def demo_cmd(name, out_dir):
    """Write a bundled demo's recording and world files."""
    case = fixtures.DEMOS[name]()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rec_path = out / f"{name}.rec.json"
    save_recording(case.recording, rec_path)
    world_path = out / f"{name}.world.json"
    world_path.write_text(canonical_json(case.world), encoding="utf-8")
    click.echo(f"wrote {rec_path} and {world_path}")


@main.command("serve")
@click.option("--port", type=int, default=8080)
@click.option("--host", default="127.0.0.1")
@click.option("--data-dir", type=click.Path(file_okay=False), default=None,
              help="session storage (defaults to $LFO_DATA_DIR or .)")
@domain_errors
def serve_cmd(port, host, data_dir):
    """Run the review service (the GUI's backend)."""
    import uvicorn

    from .service import create_app

    app = create_app(data_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def run_cli(argv=None) -> int:
    """Programmatic entry point: returns the process exit code (0 success,
    1 domain error, 2 usage error) instead of exiting."""
    try:
        main.main(args=argv, prog_name="lfo", standalone_mode=True)
    except SystemExit as e:
        code = e.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 1
    return 0


if __name__ == "__main__":
    main()
