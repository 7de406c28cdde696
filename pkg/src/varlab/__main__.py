from .lab_harness import main

main()
