#!/usr/bin/env python
import sys
from granular.harness import cli


class ManagementUtility:
    def __init__(self, argv=None):
        self.argv = argv or sys.argv[:]
    def execute(self):
        try:
            subcommand = self.argv[1]
        except IndexError:
            subcommand = 'help'
        if subcommand == 'run':
            return cli.main(self.argv[2:])
        elif subcommand == 'help':
            print("Available commands:")
            print("run [--preset=<name>] [--nodes N --buckets B --keys-per-node K ...]")
            print("help")
            print(f"Presets: {', '.join(cli.PRESET_NAMES)}")
            print("Use 'run --help' for every flag.")
            return 0
        else:
            print(f"Unknown command: {subcommand}")
            print("Please use 'help' to see available commands.")
            return 2


def execute_from_command_line(argv=None):
    utility = ManagementUtility(argv)
    return utility.execute()


def main():
    sys.exit(execute_from_command_line(sys.argv))
if __name__ == '__main__':
    main()
