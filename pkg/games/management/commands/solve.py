from games.cli import EXIT_FALSE, EXIT_MULTIPLE, EXIT_OK, GameCommand
from games.elimination import OutcomeKind, compute_trace, outcome_to_dict


class Command(GameCommand):
    help = "Compute the Perfectly Transparent Equilibrium of a game."

    EXIT_CODES = {
        OutcomeKind.PTE: EXIT_OK,
        OutcomeKind.NONE: EXIT_FALSE,
        OutcomeKind.MULTIPLE: EXIT_MULTIPLE,
    }

    def add_arguments(self, parser):
        self.add_game_argument(parser)
        self.add_format_argument(parser)

    def handle(self, *args, **options):
        game = self.read_game(options['game'])
        trace = compute_trace(game)
        outcome = trace.outcome

        if options['format'] == 'json':
            data = outcome_to_dict(game, outcome)
            data['fixpoint_level'] = trace.fixpoint_level
            self.write_json(data)
        else:
            self.stdout.write(f"{outcome.describe(game)} [fixpoint level {trace.fixpoint_level}]")

        self.finish(self.EXIT_CODES[outcome.kind])
