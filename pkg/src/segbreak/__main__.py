from segbreak.cli import main

raise SystemExit(main())
