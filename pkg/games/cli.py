"""
各管理命令共用的基础设施
"""

import argparse
import json
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from .core import Game, load_game
from .exceptions import GameError, TiesViolationError

# 所有命令共用的退出码
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FALSE = 2
EXIT_MULTIPLE = 3


class GameCommand(BaseCommand):
    """从 --game 读取博弈文件的命令基类"""

    requires_system_checks = []
    requires_migrations_checks = False

    def add_game_argument(self, parser, required=True):
        parser.add_argument('--game', required=required, metavar='<path>',
                            help='Game file in the JSON game format')

    def add_format_argument(self, parser):
        parser.add_argument('--format', choices=['text', 'json'], default='text',
                            help='Output format (default: %(default)s)')

    def read_game(self, path, allow_ties=False) -> Game:
        try:
            text = Path(path).read_text(encoding='utf-8')
        except OSError as e:
            raise CommandError(f"cannot read game file {path}: {e}")
        try:
            game, report = load_game(text)
        except GameError as e:
            raise CommandError(f"{path}: {e}")
        if not report.ok and not allow_ties:
            raise CommandError(f"{path}: {TiesViolationError(report)}")
        return game

    def add_max_level_argument(self, parser):
        parser.add_argument('--max-level', type=max_level, default='auto', metavar='<k>|auto',
                            help='Highest world level kept (default: fixpoint level plus margin)')

    def write_json(self, data):
        self.stdout.write(json.dumps(data, indent=2, sort_keys=True))

    def finish(self, code: int):
        if code != EXIT_OK:
            raise SystemExit(code)


def max_level(text: str):
    """--max-level 的 argparse 类型：'auto' 或非负整数"""
    if text.lower() == 'auto':
        return 'auto'
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"max level must be >= 0, got {value}")
    return value
