import os
import sys

# Add the project root to the Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from distvae.cli.main import main

if __name__ == '__main__':
    # Run the command line
    sys.exit(main())
