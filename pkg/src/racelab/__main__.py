from racelab.cli import main

main()
