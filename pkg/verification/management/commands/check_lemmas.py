from django.core.management.base import CommandError

from games.cli import EXIT_FALSE, EXIT_OK, GameCommand
from games.exceptions import GameError
from kripke.structure import build_canonical
from verification.checks import check_structure, verify_pte_characterization, verify_theorem_level


class Command(GameCommand):
    help = "Run the structure checks and characterization checks on one game."

    def add_arguments(self, parser):
        self.add_game_argument(parser)
        self.add_max_level_argument(parser)
        self.add_format_argument(parser)

    def handle(self, *args, **options):
        game = self.read_game(options['game'])
        try:
            structure = build_canonical(game, options['max_level'])
        except GameError as e:
            raise CommandError(str(e))

        results = check_structure(structure)
        for k in range(1, structure.trace.fixpoint_level + 2):
            results.append(verify_theorem_level(game, k, structure))
        results.append(verify_pte_characterization(game, structure, structure.trace))

        if options['format'] == 'json':
            self.write_json({
                'max_level': structure.max_level,
                'checks': [
                    {
                        'name': result.name,
                        'passed': result.passed,
                        'counterexamples': [str(c) for c in result.counterexamples],
                        'notes': list(result.notes),
                    }
                    for result in results
                ],
            })
        else:
            self.stdout.write(f"structure up to level {structure.max_level}")
            for result in results:
                self.stdout.write(f"{'PASS' if result.passed else 'FAIL'} {result.name}")
                for counterexample in result.counterexamples:
                    self.stdout.write(f"  {counterexample}")
                for note in result.notes:
                    self.stdout.write(f"  note: {note}")

        self.finish(EXIT_OK if all(result.passed for result in results) else EXIT_FALSE)
