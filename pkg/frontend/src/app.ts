// Wiring: gallery pane, query pane, single in-flight query via sequence
// numbers, breadcrumb navigation.
import { ApiClient, ApiError } from "./api.js";
import {
  applyError,
  applyResponse,
  beginRequest,
  goBack,
  initialState,
  setEnc,
  setK,
  setQuery,
  setRep,
  UiQueryState,
} from "./state.js";
import { renderBreadcrumbs, renderGallery, renderMap, renderResults } from "./render.js";
import { CLASS_ABBREV, ENC_TAGS, REP_TAGS, EncTag, RepTag, VignetteSummary } from "./types.js";

const PAGE_SIZE = 24;

export class App {
  state: UiQueryState = initialState();
  galleryPage = 0;
  galleryClass: number | null = null;
  galleryTotal = 0;
  galleryItems: VignetteSummary[] = [];
  metaById = new Map<string, VignetteSummary["meta"]>();

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
  ) {}

  async start(): Promise<void> {
    await this.loadGallery();
    this.draw();
  }

  async loadGallery(): Promise<void> {
    const page = await this.api.listVignettes({
      classLabel: this.galleryClass ?? undefined,
      limit: PAGE_SIZE,
      offset: this.galleryPage * PAGE_SIZE,
    });
    this.galleryTotal = page.total;
    this.galleryItems = page.items;
    for (const item of page.items) {
      this.metaById.set(item.id, item.meta);
    }
  }

  private async runQuery(): Promise<void> {
    const queryId = this.state.queryId;
    if (queryId === null) return;
    const [next, seq] = beginRequest(this.state);
    this.state = next;
    const { k, rep, enc } = this.state;
    try {
      const resp = await this.api.queryById(queryId, k, rep, enc);
      for (const r of resp.results) {
        this.metaById.set(r.id, r.meta);
      }
      this.state = applyResponse(this.state, seq, resp.results);
    } catch (err) {
      const message = err instanceof ApiError
        ? `${err.status}: ${err.message}`
        : String(err);
      this.state = applyError(this.state, seq, message);
    }
    this.draw();
  }

  selectQuery(id: string): void {
    this.state = setQuery(this.state, id);
    this.draw();
    void this.runQuery();
  }

  jumpBack(index: number): void {
    this.state = goBack(this.state, index);
    this.draw();
    void this.runQuery();
  }

  private controlBar(): HTMLElement {
    const bar = document.createElement("div");
    bar.className = "controls";

    const kLabel = document.createElement("label");
    kLabel.textContent = `k = ${this.state.k}`;
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "1";
    slider.max = "200";
    slider.value = String(this.state.k);
    slider.addEventListener("change", () => {
      this.state = setK(this.state, Number(slider.value));
      void this.runQuery();
    });
    kLabel.appendChild(slider);
    bar.appendChild(kLabel);

    const repSel = document.createElement("select");
    for (const tag of REP_TAGS) {
      const opt = document.createElement("option");
      opt.value = tag;
      opt.textContent = tag;
      opt.selected = tag === this.state.rep;
      repSel.appendChild(opt);
    }
    repSel.addEventListener("change", () => {
      this.state = setRep(this.state, repSel.value as RepTag);
      void this.runQuery();
    });
    bar.appendChild(repSel);

    const encSel = document.createElement("select");
    for (const tag of ENC_TAGS) {
      const opt = document.createElement("option");
      opt.value = tag;
      opt.textContent = tag;
      opt.selected = tag === this.state.enc;
      encSel.appendChild(opt);
    }
    encSel.addEventListener("change", () => {
      this.state = setEnc(this.state, encSel.value as EncTag);
      void this.runQuery();
    });
    bar.appendChild(encSel);
    return bar;
  }

  private galleryControls(): HTMLElement {
    const bar = document.createElement("div");
    bar.className = "controls";
    const filter = document.createElement("select");
    const any = document.createElement("option");
    any.value = "";
    any.textContent = "all classes";
    filter.appendChild(any);
    CLASS_ABBREV.forEach((abbr, i) => {
      const opt = document.createElement("option");
      opt.value = String(i);
      opt.textContent = abbr;
      opt.selected = this.galleryClass === i;
      filter.appendChild(opt);
    });
    filter.addEventListener("change", () => {
      this.galleryClass = filter.value === "" ? null : Number(filter.value);
      this.galleryPage = 0;
      void this.loadGallery().then(() => this.draw());
    });
    bar.appendChild(filter);

    const pages = Math.max(1, Math.ceil(this.galleryTotal / PAGE_SIZE));
    const pager = document.createElement("span");
    pager.className = "pager";
    const prev = document.createElement("button");
    prev.textContent = "‹";
    prev.disabled = this.galleryPage === 0;
    prev.addEventListener("click", () => {
      this.galleryPage -= 1;
      void this.loadGallery().then(() => this.draw());
    });
    const next = document.createElement("button");
    next.textContent = "›";
    next.disabled = this.galleryPage >= pages - 1;
    next.addEventListener("click", () => {
      this.galleryPage += 1;
      void this.loadGallery().then(() => this.draw());
    });
    pager.append(prev, ` ${this.galleryPage + 1}/${pages} `, next);
    bar.appendChild(pager);
    return bar;
  }

  draw(): void {
    this.root.replaceChildren();

    const galleryPane = document.createElement("section");
    galleryPane.className = "pane gallery-pane";
    galleryPane.appendChild(Object.assign(document.createElement("h2"),
                                          { textContent: "Gallery" }));
    galleryPane.appendChild(this.galleryControls());
    galleryPane.appendChild(renderGallery(
      this.galleryItems,
      (id) => this.api.thumbnailUrl(id, this.state.rep),
      (id) => this.selectQuery(id),
    ));
    this.root.appendChild(galleryPane);

    const queryPane = document.createElement("section");
    queryPane.className = "pane query-pane";
    queryPane.appendChild(Object.assign(document.createElement("h2"),
                                        { textContent: "Query by example" }));
    queryPane.appendChild(renderBreadcrumbs(
      this.state.breadcrumbs, this.state.queryId, (i) => this.jumpBack(i)));
    if (this.state.queryId === null) {
      queryPane.appendChild(Object.assign(document.createElement("p"),
        { className: "empty-state", textContent: "Pick a vignette from the gallery." }));
    } else {
      queryPane.appendChild(this.controlBar());
      const queryMeta = this.metaById.get(this.state.queryId);
      const queryThumb = document.createElement("img");
      queryThumb.className = "thumb query-thumb";
      queryThumb.src = this.api.thumbnailUrl(this.state.queryId, this.state.rep);
      queryPane.appendChild(queryThumb);
      if (this.state.error !== null) {
        queryPane.appendChild(Object.assign(document.createElement("p"),
          { className: "error", textContent: this.state.error }));
      }
      if (this.state.results !== null) {
        const qClass = queryMeta?.class_label ?? null;
        queryPane.appendChild(renderResults(
          this.state.results, qClass, (id) => this.selectQuery(id)));
        const map = renderMap(this.state.results, {
          lat: queryMeta?.lat ?? null,
          lon: queryMeta?.lon ?? null,
          classLabel: qClass,
        });
        if (map !== null) {
          queryPane.appendChild(map);
        }
      }
    }
    this.root.appendChild(queryPane);
  }
}

export function mount(): void {
  const root = document.getElementById("app");
  if (root) {
    const app = new App(new ApiClient(""), root);
    void app.start();
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount();
}
