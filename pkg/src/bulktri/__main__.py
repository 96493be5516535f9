import sys

from bulktri.cli import main

sys.exit(main())
