"""Learning-from-observation: demonstration recordings in, task-model
programs out, simulated execution to close the loop."""

__version__ = "0.1.0"
