import sys

from mdl_bell.cli import main

sys.exit(main())
