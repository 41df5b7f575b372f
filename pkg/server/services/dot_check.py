"""Minimal Graphviz DOT grammar used to check rendered output."""

from __future__ import annotations

from dataclasses import dataclass, field

from lark import Lark, Token, Tree

from server.services.diagnostics import ParseDiagnostic, parse_tree
from server.services.errors import DiagnosticError

DOT_GRAMMAR = r"""
start: STRICT? (DIGRAPH | GRAPH) id? "{" stmt_list "}"
stmt_list: (_stmt ";"?)*
_stmt: node_stmt | edge_stmt | attr_stmt | assign | subgraph
assign: id "=" id
attr_stmt: (GRAPH | NODE | EDGE) attr_list
attr_list: ("[" [a_list] "]")+
a_list: pair ((";" | ",")? pair)*
pair: id "=" id
edge_stmt: (node_id | subgraph) (EDGEOP (node_id | subgraph))+ attr_list?
node_stmt: node_id attr_list?
node_id: id (":" id (":" id)?)?
subgraph: ("subgraph" id?)? "{" stmt_list "}"
id: ID | NUMERAL | QUOTED

STRICT: "strict"
DIGRAPH: "digraph"
GRAPH: "graph"
NODE: "node"
EDGE: "edge"
EDGEOP: "->" | "--"
ID: /[A-Za-z_\u0080-\uffff][A-Za-z_0-9\u0080-\uffff]*/
NUMERAL: /-?(\.[0-9]+|[0-9]+(\.[0-9]*)?)/
QUOTED: /"(?:[^"\\]|\\.)*"/s

LINE_COMMENT: /(\/\/|#)[^\n]*/
BLOCK_COMMENT: /\/\*(.|\n)*?\*\//

%import common.WS
%ignore WS
%ignore LINE_COMMENT
%ignore BLOCK_COMMENT
"""

_parser = Lark(DOT_GRAMMAR, parser='lalr', propagate_positions=True)


def _unquote(token: Token) -> str:
  text = str(token)
  if token.type == 'QUOTED':
    return text[1:-1].replace('\\"', '"').replace('\\\\', '\\')
  return text


def _id(node: Tree) -> str:
  return _unquote(node.children[0])


@dataclass
class DotEdge:
  """An edge statement, split into one edge per consecutive pair of endpoints."""

  source: str
  target: str
  attrs: dict[str, str] = field(default_factory=dict)


@dataclass
class DotSubgraph:
  """A subgraph and the nodes declared directly inside it."""

  name: str | None
  parent: str | None
  nodes: list[str] = field(default_factory=list)


@dataclass
class DotGraph:
  """What a DOT text declares, enough to assert on rendered output."""

  name: str | None
  directed: bool
  nodes: dict[str, dict[str, str]] = field(default_factory=dict)
  edges: list[DotEdge] = field(default_factory=list)
  subgraphs: list[DotSubgraph] = field(default_factory=list)

  def subgraph(self, name: str) -> DotSubgraph:
    """The subgraph with this name."""
    return next(s for s in self.subgraphs if s.name == name)


def _attrs(node: Tree | None) -> dict[str, str]:
  found: dict[str, str] = {}
  if node is None:
    return found
  for a_list in node.children:
    if a_list is None:
      continue
    for pair in a_list.children:
      key, value = pair.children
      found[_id(key)] = _id(value)
  return found


def _walk(stmts: Tree, graph: DotGraph, scope: str | None) -> None:
  for stmt in stmts.children:
    if stmt.data == 'node_stmt':
      node_id = _id(stmt.children[0].children[0])
      attr_list = stmt.children[1] if len(stmt.children) > 1 else None
      graph.nodes.setdefault(node_id, {}).update(_attrs(attr_list))
      if scope is not None:
        graph.subgraph(scope).nodes.append(node_id)
    elif stmt.data == 'edge_stmt':
      ends = [c for c in stmt.children if isinstance(c, Tree) and c.data == 'node_id']
      lists = [c for c in stmt.children if isinstance(c, Tree) and c.data == 'attr_list']
      attrs = _attrs(lists[0] if lists else None)
      for source, target in zip(ends, ends[1:]):
        graph.edges.append(DotEdge(_id(source.children[0]), _id(target.children[0]), dict(attrs)))
    elif stmt.data == 'subgraph':
      name_nodes = [c for c in stmt.children if isinstance(c, Tree) and c.data == 'id']
      name = _id(name_nodes[0]) if name_nodes else None
      graph.subgraphs.append(DotSubgraph(name=name, parent=scope))
      _walk(stmt.children[-1], graph, name)


def parse_dot(text: str) -> DotGraph:
  """Parse DOT text into its nodes, edges and (nested) subgraphs.

  Raises:
    DiagnosticError: the text is not DOT.
  """
  _, tree = parse_tree(_parser, text, '<dot>')
  tokens = [c for c in tree.children if isinstance(c, Token)]
  ids = [c for c in tree.children if isinstance(c, Tree) and c.data == 'id']
  directed = any(t.type == 'DIGRAPH' for t in tokens)
  graph = DotGraph(name=_id(ids[0]) if ids else None, directed=directed)
  _walk(tree.children[-1], graph, None)
  return graph


def check_dot(text: str) -> list[ParseDiagnostic]:
  """Empty when the text parses as DOT, else the syntax diagnostic."""
  try:
    parse_dot(text)
  except DiagnosticError as e:
    return e.diagnostics
  return []
