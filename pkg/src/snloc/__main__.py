"""Allow ``python -m snloc``."""

import sys

from .cli import main

sys.exit(main())
