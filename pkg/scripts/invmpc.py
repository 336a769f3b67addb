#!/usr/bin/env python3
"""
InvMPC 命令行脚本

用法:
    python scripts/invmpc.py run --mode odcm --case 1
    python scripts/invmpc.py compare --cases 1,2,3 --modes odcm,opcm
"""

import sys
from pathlib import Path

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.harness.cli import main


if __name__ == "__main__":
    sys.exit(main())
