"""Module entrypoint for `python -m freeedge`."""

from .cli import main

if __name__ == "__main__":
    main()
