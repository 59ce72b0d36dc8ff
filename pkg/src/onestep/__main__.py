import sys

from onestep.expcli import main

sys.exit(main())
