/**
 * Deterministic layered layout for a group net.
 *
 * Groups are placed in columns by breadth-first depth from the first
 * declared group, rows within a column following visit order; both orders
 * derive only from declaration order, so the same net always lays out the
 * same way.  Sizes are fixed per variable count — no measurement, no
 * randomness.
 */

import type { NetEdge, NetPayload, NetVariable } from "../api/types.js";

export const VAR_BOX = 26;
export const VAR_GAP = 6;
export const NODE_PAD = 12;
export const NODE_HEADER = 22;
export const NODE_HEIGHT = NODE_HEADER + VAR_BOX + NODE_PAD * 2;
export const LAYER_GAP = 110;
export const ROW_GAP = 40;
export const MARGIN = 24;

export interface LayoutNode {
  id: string;
  name: string;
  layer: number;
  row: number;
  x: number;
  y: number;
  width: number;
  height: number;
  variables: NetVariable[];
}

export interface LayoutEdge {
  a: string;
  b: string;
  label: string;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface NetLayout {
  nodes: LayoutNode[];
  edges: LayoutEdge[];
  width: number;
  height: number;
}

export function nodeWidth(variableCount: number): number {
  return NODE_PAD * 2 + variableCount * VAR_BOX + (variableCount - 1) * VAR_GAP;
}

export function layoutNet(net: NetPayload): NetLayout {
  const order = new Map(net.legs.map((leg, index) => [leg.id, index]));
  const neighbors = new Map<string, string[]>(net.legs.map((leg) => [leg.id, []]));
  for (const edge of net.edges) {
    neighbors.get(edge.a)?.push(edge.b);
    neighbors.get(edge.b)?.push(edge.a);
  }
  for (const list of neighbors.values()) {
    list.sort((a, b) => (order.get(a) ?? 0) - (order.get(b) ?? 0));
  }

  const layerOf = new Map<string, number>();
  const visitOrder: string[] = [];
  for (const leg of net.legs) {
    if (layerOf.has(leg.id)) continue;
    layerOf.set(leg.id, 0);
    const queue = [leg.id];
    while (queue.length > 0) {
      const current = queue.shift()!;
      visitOrder.push(current);
      for (const next of neighbors.get(current) ?? []) {
        if (layerOf.has(next)) continue;
        layerOf.set(next, layerOf.get(current)! + 1);
        queue.push(next);
      }
    }
  }

  const rowCounters = new Map<number, number>();
  const columnWidth = new Map<number, number>();
  const legMap = new Map(net.legs.map((leg) => [leg.id, leg]));
  for (const id of visitOrder) {
    const layer = layerOf.get(id)!;
    const width = nodeWidth(legMap.get(id)!.variables.length);
    columnWidth.set(layer, Math.max(columnWidth.get(layer) ?? 0, width));
  }
  const columnX = new Map<number, number>();
  let x = MARGIN;
  for (let layer = 0; columnWidth.has(layer); layer += 1) {
    columnX.set(layer, x);
    x += columnWidth.get(layer)! + LAYER_GAP;
  }

  const nodes: LayoutNode[] = visitOrder.map((id) => {
    const leg = legMap.get(id)!;
    const layer = layerOf.get(id)!;
    const row = rowCounters.get(layer) ?? 0;
    rowCounters.set(layer, row + 1);
    return {
      id,
      name: leg.name,
      layer,
      row,
      x: columnX.get(layer)!,
      y: MARGIN + row * (NODE_HEIGHT + ROW_GAP),
      width: nodeWidth(leg.variables.length),
      height: NODE_HEIGHT,
      variables: leg.variables,
    };
  });

  const names = new Map<string, string>();
  for (const leg of net.legs) {
    for (const variable of leg.variables) names.set(variable.id, variable.name);
  }
  const nodeMap = new Map(nodes.map((node) => [node.id, node]));
  const edges: LayoutEdge[] = net.edges.map((edge: NetEdge) => {
    const a = nodeMap.get(edge.a)!;
    const b = nodeMap.get(edge.b)!;
    return {
      a: edge.a,
      b: edge.b,
      label: edge.shared.map((id) => names.get(id) ?? id).join(", "),
      x1: a.x + a.width / 2,
      y1: a.y + a.height / 2,
      x2: b.x + b.width / 2,
      y2: b.y + b.height / 2,
    };
  });

  const width =
    Math.max(...nodes.map((node) => node.x + node.width), 0) + MARGIN;
  const height =
    Math.max(...nodes.map((node) => node.y + node.height), 0) + MARGIN;
  return { nodes, edges, width, height };
}
