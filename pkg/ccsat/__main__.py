from ccsat.cli import main

raise SystemExit(main())
