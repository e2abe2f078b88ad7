import sys

from corrbounds.cli import main

sys.exit(main())
