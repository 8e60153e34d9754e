import sys

from covstream.cli import main

sys.exit(main())
