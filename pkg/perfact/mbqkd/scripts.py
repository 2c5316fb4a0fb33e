import sys

from perfact.mbqkd.main import main


def mbqkd():
    sys.exit(main())
