from .cli import main as run
