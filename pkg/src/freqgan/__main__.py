from freqgan.cli import main

main()
