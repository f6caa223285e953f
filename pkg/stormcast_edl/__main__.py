import sys

from stormcast_edl.cli import main

sys.exit(main())
