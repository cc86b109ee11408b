import sys

from trustscope.cli import main

sys.exit(main())
