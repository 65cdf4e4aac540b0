"""Story engine launcher. Same commands as the `storyengine` console script."""

import sys
from pathlib import Path

from dotenv import load_dotenv

ROOT = Path(__file__).parent
load_dotenv(ROOT / ".env")


def main():
    from storyengine.cli import main as cli_main

    sys.exit(cli_main())


if __name__ == "__main__":
    main()
