"""Entry point for the ITS lower-bound analyzer."""

import sys

from cli import run


def main():
    """Application entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
