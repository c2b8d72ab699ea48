"""Gait event detection from a single pelvis-worn IMU.

Pipeline stages live in separate modules:

- :mod:`gaitevents.signal`      channel types, CSV ingestion, band-pass filtering
- :mod:`gaitevents.events`      groundtruth HS/TO extraction from foot gyroscopes
- :mod:`gaitevents.dataset`     one-step-ahead sliding-window datasets
- :mod:`gaitevents.neuralnet`   numpy layers with exact backpropagation, Adam
- :mod:`gaitevents.zoo`         the sixteen named architectures
- :mod:`gaitevents.postprocess` pulse validation of raw model outputs
- :mod:`gaitevents.evaluation`  tolerance-window accuracy and timing error
- :mod:`gaitevents.synthgait`   synthetic cohort generator with exact events
- :mod:`gaitevents.cli`         command-line entry point
"""

__version__ = "0.1.0"
