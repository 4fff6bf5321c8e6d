from dotenv import load_dotenv

# Load environment variables FIRST, before any other imports
load_dotenv()

from src.cli import main

if __name__ == "__main__":
    main()
