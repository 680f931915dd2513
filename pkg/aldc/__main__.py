from aldc.cli import main_entry

main_entry()
