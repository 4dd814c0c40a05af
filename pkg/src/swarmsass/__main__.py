from swarmsass.cli import entry

entry()
