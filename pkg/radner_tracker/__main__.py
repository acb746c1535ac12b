import sys

from radner_tracker.cli import main


sys.exit(main())
