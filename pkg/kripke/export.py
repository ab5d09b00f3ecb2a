"""
将规范结构导出为 Graphviz

每个世界一个节点，标签为 "(profile),level,CLASS"；最近状态函数的每个偏离
一条边，标签为 "f:<player>→<strategy>"。逻辑可达关系在可能世界上是全关系，
只在注释里概括，不画成边。
"""

from typing import List

from .structure import CanonicalStructure, World, WorldClass

_SHAPES = {
    WorldClass.IMPOSSIBLE: 'box',
    WorldClass.NONNORMAL_POSSIBLE: 'ellipse',
    WorldClass.NORMAL: 'doublecircle',
}


def _node_id(w: World) -> str:
    return 'w_' + '_'.join(str(s) for s in w.profile) + f"_{w.level}"


def _quote(text: str) -> str:
    return '"' + text.replace('"', '\\"') + '"'


def export_structure(structure: CanonicalStructure) -> str:
    game = structure.game
    counts = {world_class: 0 for world_class in WorldClass}
    for w in structure.worlds:
        counts[structure.class_of(w)] += 1

    lines: List[str] = [
        'digraph canonical {',
        f"  // max level {structure.max_level}, fixpoint level {structure.trace.fixpoint_level}",
        f"  // IMPOSSIBLE={counts[WorldClass.IMPOSSIBLE]} "
        f"NONNORMAL_POSSIBLE={counts[WorldClass.NONNORMAL_POSSIBLE]} "
        f"NORMAL={counts[WorldClass.NORMAL]}",
        '  // logical accessibility: NORMAL worlds reach every NONNORMAL_POSSIBLE and NORMAL world;',
        '  // NONNORMAL_POSSIBLE and IMPOSSIBLE worlds reach every world',
        '  // epistemic accessibility: equality',
        '  rankdir=BT;',
    ]

    for level in range(structure.max_level + 1):
        lines.append(f"  subgraph level_{level} {{")
        lines.append('    rank=same;')
        for w in structure.worlds:
            if w.level != level:
                continue
            world_class = structure.class_of(w)
            label = structure.describe(w).replace('@', ',') + f",{world_class.value}"
            lines.append(f"    {_node_id(w)} [label={_quote(label)}, shape={_SHAPES[world_class]}];")
        lines.append('  }')

    for w in structure.worlds:
        for player in range(game.player_count):
            for strategy in range(game.strategy_counts[player]):
                if strategy == w.profile[player]:
                    continue
                target = structure.closest[(w, player, strategy)]
                label = f"f:{game.players[player]}→{game.strategies[player][strategy]}"
                lines.append(f"  {_node_id(w)} -> {_node_id(target)} [label={_quote(label)}];")

    for a, b in sorted(structure.epistemic_links):
        if a != b:
            lines.append(f"  {_node_id(a)} -> {_node_id(b)} [style=dashed, label=\"K\"];")

    lines.append('}')
    return '\n'.join(lines) + '\n'
