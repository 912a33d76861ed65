from docsmell.cli import run

run()
