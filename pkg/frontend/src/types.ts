// Wire types shared with the server. Field names and shapes follow the
// HTTP contract exactly; nothing here is renamed on the way out.

export interface CategoryDef {
  id: number;
  name: string;
  supercategory: string;
  /** Six hex digits, no leading "#". */
  display_color: string;
  shortcut_key?: string;
}

export interface DraftAnnotation {
  category_name: string;
  /** [x, y] pairs in captured-image pixel space. */
  polygon: [number, number][];
  attributes: Record<string, string>;
}

export interface SubmissionPayload {
  annotator_id: string;
  captured_at: string;
  page_url: string;
  viewport: { width: number; height: number; device_pixel_ratio: number };
  /** Base64 PNG without any data-URL prefix. */
  image: string;
  annotations: DraftAnnotation[];
}

export interface SubmissionReceipt {
  submission_id: string;
  duplicate: boolean;
  geo_attached: boolean;
}

export interface Violation {
  code: string;
  message: string;
  severity?: string;
}
