from qsteer.cli import main

raise SystemExit(main())
