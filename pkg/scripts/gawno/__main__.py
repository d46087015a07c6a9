"""Allow running gawno as a module: python -m gawno"""

from .cli import main

if __name__ == "__main__":
    main()
