"""sbibridge: trainer-side clients for the sbiforge scoring service."""

__version__ = "0.1.0"
