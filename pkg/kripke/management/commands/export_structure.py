from pathlib import Path

from games.cli import GameCommand
from kripke.export import export_structure
from kripke.structure import build_canonical


class Command(GameCommand):
    help = "Write the canonical structure of a game as a Graphviz graph."

    def add_arguments(self, parser):
        self.add_game_argument(parser)
        self.add_max_level_argument(parser)
        parser.add_argument('--output', '-o', metavar='<path>',
                            help='Write to a file instead of stdout')

    def handle(self, *args, **options):
        game = self.read_game(options['game'])
        text = export_structure(build_canonical(game, options['max_level']))
        if options['output']:
            Path(options['output']).write_text(text, encoding='utf-8')
            self.stdout.write(self.style.SUCCESS(f"Wrote {options['output']}"))
        else:
            self.stdout.write(text, ending='')
