"""Real-time detection of voice-converted speech from 1-second audio windows."""

__version__ = "0.1.0"
