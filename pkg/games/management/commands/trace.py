from games.cli import GameCommand
from games.elimination import compute_trace, format_trace, trace_to_dict


class Command(GameCommand):
    help = "Print every elimination level with its maximin thresholds."

    def add_arguments(self, parser):
        self.add_game_argument(parser)
        self.add_format_argument(parser)

    def handle(self, *args, **options):
        game = self.read_game(options['game'])
        trace = compute_trace(game)
        if options['format'] == 'json':
            self.write_json(trace_to_dict(trace))
        else:
            self.stdout.write(format_trace(trace), ending='')
