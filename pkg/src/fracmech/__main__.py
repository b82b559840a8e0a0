from fracmech.cli import main

main()
