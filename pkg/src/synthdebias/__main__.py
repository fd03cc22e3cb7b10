import sys

from synthdebias.cli import main

sys.exit(main())
