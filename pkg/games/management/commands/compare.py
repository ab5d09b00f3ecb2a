from games.cli import GameCommand
from games.core import format_profile, format_profiles
from games.elimination import compare, outcome_to_dict


class Command(GameCommand):
    help = "Compare the PTE with pure Nash, individual rationality, Pareto optimality and Hofstadter."

    def add_arguments(self, parser):
        self.add_game_argument(parser)
        self.add_format_argument(parser)

    def handle(self, *args, **options):
        game = self.read_game(options['game'])
        report = compare(game)

        def labels(profiles):
            return [format_profile(game, p) for p in sorted(profiles)]

        if options['format'] == 'json':
            self.write_json({
                'pte': outcome_to_dict(game, report.outcome),
                'pure_nash': labels(report.pure_nash),
                'individually_rational': labels(report.individually_rational),
                'pareto_optimal': labels(report.pareto_optimal),
                'hofstadter': None if report.hofstadter is None else format_profile(game, report.hofstadter),
            })
            return

        outcome = report.outcome
        pte = format_profile(game, outcome.profile) if outcome.profile else outcome.describe(game)
        self.stdout.write(f"PTE={pte}")
        self.stdout.write(f"Nash={format_profiles(game, report.pure_nash)}")
        self.stdout.write(f"S1={format_profiles(game, report.individually_rational)}")
        self.stdout.write(f"Pareto={format_profiles(game, report.pareto_optimal)}")
        if report.hofstadter is not None:
            self.stdout.write(f"Hofstadter={format_profile(game, report.hofstadter)}")
