// DOM builders. Every displayed number comes verbatim from the API payload;
// similarities render with exactly 3 decimals.
import type { QueryResultItem, VignetteSummary } from "./types.js";

export function formatSimilarity(x: number): string {
  return x.toFixed(3);
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderGallery(
  items: VignetteSummary[],
  thumbnailUrl: (id: string) => string,
  onSelect: (id: string) => void,
): HTMLElement {
  const grid = el("div", "gallery-grid");
  if (items.length === 0) {
    grid.appendChild(el("p", "empty-state", "No vignettes in the store yet."));
    return grid;
  }
  for (const item of items) {
    const card = el("div", "card gallery-card");
    card.dataset.id = item.id;
    const img = el("img", "thumb");
    img.src = thumbnailUrl(item.id);
    img.alt = item.id;
    card.appendChild(img);
    const label = item.meta.class_abbrev ?? "?";
    card.appendChild(el("div", "card-caption", `${item.id} · ${label}`));
    card.addEventListener("click", () => onSelect(item.id));
    grid.appendChild(card);
  }
  return grid;
}

export function renderResults(
  results: QueryResultItem[],
  queryClassLabel: number | null,
  onSelect: (id: string) => void,
): HTMLElement {
  const grid = el("div", "result-grid");
  for (const r of results) {
    const card = el("div", "card result-card");
    card.dataset.id = r.id;
    card.dataset.rank = String(r.rank);
    const img = el("img", "thumb");
    img.src = r.thumbnail_url;
    img.alt = r.id;
    card.appendChild(img);
    const sim = el("div", "similarity", formatSimilarity(r.similarity));
    sim.dataset.testid = "similarity";
    card.appendChild(sim);
    const label = r.meta.class_abbrev ?? "?";
    const match = queryClassLabel !== null && r.meta.class_label === queryClassLabel;
    const caption = el("div", `card-caption ${match ? "match" : "mismatch"}`,
                       `#${r.rank} ${r.id} · ${label}`);
    card.appendChild(caption);
    card.addEventListener("click", () => onSelect(r.id));
    grid.appendChild(card);
  }
  return grid;
}

export function renderBreadcrumbs(
  trail: string[],
  current: string | null,
  onJump: (index: number) => void,
): HTMLElement {
  const nav = el("nav", "breadcrumbs");
  trail.forEach((id, index) => {
    const link = el("a", "crumb", id);
    link.href = "#";
    link.addEventListener("click", (ev) => {
      ev.preventDefault();
      onJump(index);
    });
    nav.appendChild(link);
    nav.appendChild(el("span", "crumb-sep", " › "));
  });
  if (current !== null) {
    nav.appendChild(el("span", "crumb current", current));
  }
  return nav;
}

/** Equirectangular scatter of results with lat/lon; collapses to nothing
 * when no result carries coordinates. Blue = class match, red = mismatch,
 * green star = the query itself. */
export function renderMap(
  results: QueryResultItem[],
  query: { lat: number | null; lon: number | null; classLabel: number | null },
): HTMLElement | null {
  const located = results.filter((r) => r.meta.lat !== null && r.meta.lon !== null);
  if (located.length === 0) {
    return null;
  }
  const w = 360;
  const h = 180;
  const svgNs = "http://www.w3.org/2000/svg";
  const svg = document.createElementNS(svgNs, "svg");
  svg.setAttribute("viewBox", `0 0 ${w} ${h}`);
  svg.setAttribute("class", "world-map");
  const frame = document.createElementNS(svgNs, "rect");
  frame.setAttribute("width", String(w));
  frame.setAttribute("height", String(h));
  frame.setAttribute("class", "map-frame");
  svg.appendChild(frame);
  const toXY = (lat: number, lon: number) =>
    [(lon + 180) / 360 * w, (90 - lat) / 180 * h] as const;
  for (const r of located) {
    const [x, y] = toXY(r.meta.lat as number, r.meta.lon as number);
    const dot = document.createElementNS(svgNs, "circle");
    dot.setAttribute("cx", x.toFixed(1));
    dot.setAttribute("cy", y.toFixed(1));
    dot.setAttribute("r", "2.5");
    const match = query.classLabel !== null && r.meta.class_label === query.classLabel;
    dot.setAttribute("class", match ? "dot match" : "dot mismatch");
    const title = document.createElementNS(svgNs, "title");
    title.textContent = `${r.id} (rank ${r.rank})`;
    dot.appendChild(title);
    svg.appendChild(dot);
  }
  if (query.lat !== null && query.lon !== null) {
    const [x, y] = toXY(query.lat, query.lon);
    const star = document.createElementNS(svgNs, "circle");
    star.setAttribute("cx", x.toFixed(1));
    star.setAttribute("cy", y.toFixed(1));
    star.setAttribute("r", "4");
    star.setAttribute("class", "dot query");
    svg.appendChild(star);
  }
  const wrap = el("div", "map-panel");
  wrap.appendChild(svg);
  return wrap;
}
