import sys

from ccnp_lab.cli import main

sys.exit(main())
