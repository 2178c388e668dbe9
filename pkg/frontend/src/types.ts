export type RepTag = "VIG" | "SUBAP" | "DOP_VIG" | "DOP_SUBAP";
export type EncTag = "BASELINE" | "AUTOENC";

export const REP_TAGS: RepTag[] = ["VIG", "SUBAP", "DOP_VIG", "DOP_SUBAP"];
export const ENC_TAGS: EncTag[] = ["BASELINE", "AUTOENC"];

export const CLASS_ABBREV = [
  "POW", "WS", "MCC", "RC", "BS", "SI", "Ic", "LWA", "AF", "OF",
] as const;

export interface VignetteMeta {
  class_label: number | null;
  class_abbrev: string | null;
  lat: number | null;
  lon: number | null;
  timestamp: string | null;
}

export interface VignetteSummary {
  id: string;
  meta: VignetteMeta;
}

export interface VignetteListResponse {
  total: number;
  limit: number;
  offset: number;
  items: VignetteSummary[];
}

export interface QueryResultItem {
  id: string;
  similarity: number;
  rank: number;
  meta: VignetteMeta;
  thumbnail_url: string;
}

export interface QueryResponse {
  query_id: string | null;
  rep: RepTag;
  enc: EncTag;
  k: number;
  results: QueryResultItem[];
}

export interface HealthResponse {
  status: string;
  index_versions: Record<string, string>;
}
