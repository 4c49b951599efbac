#!/usr/bin/env python3
"""
Startup script for the citeforecast command line
"""

import logging
import sys

from config import Config
from errors import CiteForecastError


def configure_logging(level=None):
    logging.basicConfig(
        level=(level or Config.LOG_LEVEL).upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def error_line(kind, code, message):
    """Machine-parsable diagnostic written to stderr on failure"""
    text = str(message).replace('\\', '\\\\').replace('"', '\\"').replace('\n', ' ')
    return f'error: kind={kind} code={code} message="{text}"'


def main(argv=None):
    """Main startup function"""
    try:
        import cli

        args = cli.build_parser().parse_args(argv)
        configure_logging(args.log_level)

        Config.validate_config()
        print("✅ Configuration validated successfully")
        print(f"🚀 Running citeforecast {args.command}...")

        paths = cli.execute(args)

        for path in paths:
            print(f"📊 Wrote {path}")
        return 0

    except CiteForecastError as e:
        print(f"❌ {e.kind.capitalize()} error: {e}")
        print(error_line(e.kind, e.exit_code, e), file=sys.stderr)
        return e.exit_code

    except ImportError as e:
        print(f"❌ Import error: {e}")
        print("\nPlease install required dependencies:")
        print("pip install -r requirements.txt")
        print(error_line('import', 1, e), file=sys.stderr)
        return 1

    except Exception as e:
        logging.getLogger(__name__).exception('Unexpected error')
        print(f"❌ Unexpected error: {e}")
        print(error_line('unexpected', 1, e), file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
