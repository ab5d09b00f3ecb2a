from pathlib import Path

from django.core.management.base import CommandError

from games.cli import GameCommand
from games.core import generate_random_game, generate_random_symmetric_game, parse_shape, serialize_game
from games.exceptions import GameError


class Command(GameCommand):
    help = "Write a seeded random no-ties game in the JSON game format."

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, required=True)
        group = parser.add_mutually_exclusive_group(required=True)
        group.add_argument('--shape', metavar='<n>x<m>[x...]',
                           help='Strategy counts per player, e.g. 3x3 or 2x2x2')
        group.add_argument('--symmetric', type=int, metavar='<n>',
                           help='Symmetric two-player game with n strategies each')
        parser.add_argument('--output', '-o', metavar='<path>',
                            help='Write to a file instead of stdout')

    def handle(self, *args, **options):
        try:
            if options['symmetric'] is not None:
                game = generate_random_symmetric_game(options['seed'], options['symmetric'])
            else:
                game = generate_random_game(options['seed'], parse_shape(options['shape']))
        except GameError as e:
            raise CommandError(str(e))

        text = serialize_game(game)
        if options['output']:
            Path(options['output']).write_text(text, encoding='utf-8')
            self.stdout.write(self.style.SUCCESS(f"Wrote {options['output']}"))
        else:
            self.stdout.write(text, ending='')
