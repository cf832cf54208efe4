import sys


def main():
    from pyrsl.mains.cli import run

    sys.exit(run())

if __name__=='__main__':
    main()
