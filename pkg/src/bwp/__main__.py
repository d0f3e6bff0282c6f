"""``python3 -m bwp`` entry point."""
import sys

from .cli import main

sys.exit(main())
