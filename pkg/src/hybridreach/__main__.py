import sys

from hybridreach.cli import main

sys.exit(main())
