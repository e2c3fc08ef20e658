//! HTML table subset with `coords` location attributes, span expansion and
//! training-example filtering.
//!
//! Accepted tags are `<table>`, `<thead>`, `<tbody>`, `<tfoot>`, `<tr>`, `<td>`
//! and `<th>`. Cells may carry `rowspan`, `colspan` and
//! `coords="<locA><locB><locC><locD>"`. Markup inside a cell is kept as cell
//! text.

use std::fmt::Write as _;

use thiserror::Error;

use crate::codec::{parse_tokens, CoordOrder, Token};
use crate::geometry::{
    bin_lower_edge, bin_upper_edge, iou, quantize_coord, quantize_upper_edge, Box2D, ImageSize,
    PadAnchor, PadTransform, NUM_LOC_BINS,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("invalid table structure: {0}")]
    StructureInvalid(String),
    #[error("malformed coords attribute {0:?}")]
    MalformedCoords(String),
}

fn invalid(msg: impl Into<String>) -> TableError {
    TableError::StructureInvalid(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub text: String,
    pub rowspan: u32,
    pub colspan: u32,
    /// Cell came from a `<th>` tag.
    pub header: bool,
    pub bbox: Option<Box2D>,
}

impl TableCell {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into(), rowspan: 1, colspan: 1, header: false, bbox: None }
    }

    pub fn with_span(mut self, rowspan: u32, colspan: u32) -> Self {
        self.rowspan = rowspan;
        self.colspan = colspan;
        self
    }

    pub fn with_box(mut self, bbox: Box2D) -> Self {
        self.bbox = Some(bbox);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.text.trim().is_empty()
    }
}

/// Span-expanded table: every slot of the `rows x cols` grid belongs to
/// exactly one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGrid {
    rows: usize,
    cols: usize,
    head_rows: usize,
    cells: Vec<TableCell>,
    origins: Vec<(usize, usize)>,
    slots: Vec<usize>,
}

impl TableGrid {
    pub fn empty() -> Self {
        Self { rows: 0, cols: 0, head_rows: 0, cells: vec![], origins: vec![], slots: vec![] }
    }

    /// Lays out cells row by row, left to right, skipping slots already
    /// claimed by row spans from above.
    pub fn from_rows(rows: Vec<Vec<TableCell>>, head_rows: usize) -> Result<Self, TableError> {
        Self::layout(rows, head_rows, false)
    }

    fn layout(rows: Vec<Vec<TableCell>>, head_rows: usize, fill_missing: bool) -> Result<Self, TableError> {
        let n_rows = rows.len();
        if head_rows > n_rows {
            return Err(invalid("more header rows than rows"));
        }
        let mut occupancy: Vec<Vec<Option<usize>>> = vec![Vec::new(); n_rows];
        let mut cells = Vec::new();
        let mut origins = Vec::new();
        for (r, row) in rows.into_iter().enumerate() {
            let mut c = 0;
            for cell in row {
                if cell.rowspan == 0 || cell.colspan == 0 {
                    return Err(invalid("spans must be at least 1"));
                }
                while occupancy[r].get(c).copied().flatten().is_some() {
                    c += 1;
                }
                let (rs, cs) = (cell.rowspan as usize, cell.colspan as usize);
                if r + rs > n_rows {
                    return Err(invalid(format!("rowspan {rs} at row {r} runs past the last row")));
                }
                let id = cells.len();
                for rr in r..r + rs {
                    let line = &mut occupancy[rr];
                    if line.len() < c + cs {
                        line.resize(c + cs, None);
                    }
                    for slot in &mut line[c..c + cs] {
                        if slot.is_some() {
                            return Err(invalid(format!("cells overlap at row {rr}")));
                        }
                        *slot = Some(id);
                    }
                }
                cells.push(cell);
                origins.push((r, c));
                c += cs;
            }
        }
        let n_cols = occupancy.iter().map(Vec::len).max().unwrap_or(0);
        let mut slots = Vec::with_capacity(n_rows * n_cols);
        for (r, line) in occupancy.iter_mut().enumerate() {
            line.resize(n_cols, None);
            for (c, slot) in line.iter().enumerate() {
                match slot {
                    Some(id) => slots.push(*id),
                    None if fill_missing => {
                        slots.push(cells.len());
                        cells.push(TableCell::new(""));
                        origins.push((r, c));
                    }
                    None => return Err(invalid(format!("row {r} is ragged: slot {c} is not covered"))),
                }
            }
        }
        // cells appended while filling must sit in row-major origin order
        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.sort_by_key(|&i| origins[i]);
        let mut grid = Self { rows: n_rows, cols: n_cols, head_rows, cells, origins, slots };
        if fill_missing {
            grid = grid.reorder(&order);
        }
        if n_cols == 0 {
            // rows without cells
            grid.rows = 0;
            grid.head_rows = 0;
        }
        debug_assert_eq!(
            grid.cells.iter().map(|c| (c.rowspan * c.colspan) as usize).sum::<usize>(),
            grid.rows * grid.cols
        );
        Ok(grid)
    }

    fn reorder(self, order: &[usize]) -> Self {
        let mut remap = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        Self {
            cells: order.iter().map(|&i| self.cells[i].clone()).collect(),
            origins: order.iter().map(|&i| self.origins[i]).collect(),
            slots: self.slots.iter().map(|&s| remap[s]).collect(),
            ..self
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of leading rows that belong to `<thead>`.
    pub fn head_rows(&self) -> usize {
        self.head_rows
    }

    pub fn slot_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Cells in row-major order of their top-left slot.
    pub fn cells(&self) -> &[TableCell] {
        &self.cells
    }

    /// Replaces a cell's box; boxes on empty cells are discarded.
    pub fn set_box(&mut self, cell: usize, bbox: Option<Box2D>) {
        let cell = &mut self.cells[cell];
        cell.bbox = if cell.is_empty() { None } else { bbox };
    }

    /// `(row, col)` of each cell's top-left slot, parallel to [`cells`](Self::cells).
    pub fn origins(&self) -> &[(usize, usize)] {
        &self.origins
    }

    /// Index into [`cells`](Self::cells) of the cell covering a slot.
    pub fn cell_at(&self, row: usize, col: usize) -> usize {
        self.slots[row * self.cols + col]
    }

    /// Cell indices starting on each row, left to right.
    pub fn row_cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.rows];
        for (i, &(r, _)) in self.origins.iter().enumerate() {
            out[r].push(i);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableParseOptions {
    pub order: CoordOrder,
    /// Pad short rows with empty cells instead of rejecting them.
    pub fill_missing_cells: bool,
}

impl Default for TableParseOptions {
    fn default() -> Self {
        Self { order: CoordOrder::TABLE_DEFAULT, fill_missing_cells: false }
    }
}

pub fn parse_table_html(s: &str) -> Result<TableGrid, TableError> {
    parse_table_html_with(s, &TableParseOptions::default())
}

#[derive(Debug, PartialEq)]
enum Section {
    Outside,
    Table,
    Head,
    Body,
}

pub fn parse_table_html_with(s: &str, opts: &TableParseOptions) -> Result<TableGrid, TableError> {
    let mut lexer = Lexer { src: s, pos: 0 };
    let mut section = Section::Outside;
    let mut rows: Vec<Vec<TableCell>> = Vec::new();
    let mut head_rows = 0usize;
    let mut seen_body_row = false;
    let mut in_row = false;
    let mut closed = false;

    while let Some(item) = lexer.next_item()? {
        match item {
            Item::Text(t) => {
                if !t.trim().is_empty() && section != Section::Outside {
                    return Err(invalid(format!("text {:?} outside a cell", t.trim())));
                }
            }
            Item::Open { name, attrs } => match name.as_str() {
                "table" => {
                    if section != Section::Outside || closed {
                        return Err(invalid("nested or repeated <table>"));
                    }
                    section = Section::Table;
                }
                "thead" | "tbody" | "tfoot" => {
                    if section != Section::Table || in_row {
                        return Err(invalid(format!("misplaced <{name}>")));
                    }
                    section = if name == "thead" { Section::Head } else { Section::Body };
                    if section == Section::Head && seen_body_row {
                        return Err(invalid("<thead> after body rows"));
                    }
                }
                "tr" => {
                    if section == Section::Outside || in_row {
                        return Err(invalid("misplaced <tr>"));
                    }
                    in_row = true;
                    rows.push(Vec::new());
                    if section == Section::Head {
                        head_rows += 1;
                    } else {
                        seen_body_row = true;
                    }
                }
                "td" | "th" => {
                    if !in_row {
                        return Err(invalid(format!("<{name}> outside a row")));
                    }
                    let text = lexer.cell_content(&name)?;
                    let cell = build_cell(&name, &attrs, text, opts.order)?;
                    rows.last_mut().expect("in_row").push(cell);
                }
                other => return Err(invalid(format!("unsupported tag <{other}>"))),
            },
            Item::Close(name) => match name.as_str() {
                "table" => {
                    if section != Section::Table || in_row {
                        return Err(invalid("unbalanced </table>"));
                    }
                    section = Section::Outside;
                    closed = true;
                }
                "thead" | "tbody" | "tfoot" => {
                    let expected = if name == "thead" { Section::Head } else { Section::Body };
                    if section != expected || in_row {
                        return Err(invalid(format!("unbalanced </{name}>")));
                    }
                    section = Section::Table;
                }
                "tr" => {
                    if !in_row {
                        return Err(invalid("unbalanced </tr>"));
                    }
                    in_row = false;
                }
                other => return Err(invalid(format!("unexpected </{other}>"))),
            },
        }
    }
    if !closed || section != Section::Outside {
        return Err(invalid("unclosed <table>"));
    }
    TableGrid::layout(rows, head_rows, opts.fill_missing_cells)
}

fn build_cell(tag: &str, attrs: &[(String, String)], raw_text: &str, order: CoordOrder) -> Result<TableCell, TableError> {
    let mut cell = TableCell::new(decode_entities(raw_text));
    cell.header = tag == "th";
    for (key, value) in attrs {
        match key.as_str() {
            "rowspan" | "colspan" => {
                let span: u32 = value
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("{key}={value:?} is not a positive integer")))?;
                if span == 0 {
                    return Err(invalid(format!("{key} must be at least 1")));
                }
                if key == "rowspan" {
                    cell.rowspan = span;
                } else {
                    cell.colspan = span;
                }
            }
            "coords" => cell.bbox = Some(parse_coords(value, order)?),
            _ => {}
        }
    }
    if cell.is_empty() {
        cell.bbox = None;
    }
    Ok(cell)
}

/// Four loc tokens to a box spanning the bins' outer edges.
pub fn parse_coords(value: &str, order: CoordOrder) -> Result<Box2D, TableError> {
    let bad = || TableError::MalformedCoords(value.to_string());
    let tokens = parse_tokens(value).map_err(|_| bad())?;
    let bins: Vec<u16> = tokens
        .iter()
        .map(|t| match t {
            Token::Loc(b) => Some(*b),
            _ => None,
        })
        .collect::<Option<_>>()
        .ok_or_else(bad)?;
    let bins: [u16; 4] = bins.try_into().map_err(|_| bad())?;
    let [x0, y0, x1, y1] = order.to_xyxy(bins);
    if x0 > x1 || y0 > y1 {
        return Err(bad());
    }
    Box2D::new(bin_lower_edge(x0), bin_lower_edge(y0), bin_upper_edge(x1), bin_upper_edge(y1)).map_err(|_| bad())
}

/// Inverse of [`parse_coords`] on bin-edge boxes.
pub fn render_coords(bbox: &Box2D, order: CoordOrder) -> String {
    let xyxy = [
        quantize_coord(bbox.x_min()),
        quantize_coord(bbox.y_min()),
        quantize_upper_edge(bbox.x_max()).max(quantize_coord(bbox.x_min())),
        quantize_upper_edge(bbox.y_max()).max(quantize_coord(bbox.y_min())),
    ];
    debug_assert!(xyxy.iter().all(|b| *b < NUM_LOC_BINS));
    order.arrange(xyxy).iter().map(|b| Token::Loc(*b).to_string()).collect()
}

/// Canonical HTML: header rows inside `<thead>`, the rest inside `<tbody>`,
/// spans only when greater than 1, and `coords` on cells that have a box.
pub fn render_table_html(grid: &TableGrid, order: CoordOrder) -> String {
    let mut out = String::from("<table>");
    let row_cells = grid.row_cells();
    let emit_rows = |out: &mut String, range: std::ops::Range<usize>| {
        for r in range {
            out.push_str("<tr>");
            for &i in &row_cells[r] {
                let cell = &grid.cells[i];
                let tag = if cell.header { "th" } else { "td" };
                out.push('<');
                out.push_str(tag);
                if cell.rowspan > 1 {
                    let _ = write!(out, " rowspan=\"{}\"", cell.rowspan);
                }
                if cell.colspan > 1 {
                    let _ = write!(out, " colspan=\"{}\"", cell.colspan);
                }
                if let Some(b) = &cell.bbox {
                    let _ = write!(out, " coords=\"{}\"", render_coords(b, order));
                }
                out.push('>');
                out.push_str(&escape_text(&cell.text));
                let _ = write!(out, "</{tag}>");
            }
            out.push_str("</tr>");
        }
    };
    if grid.head_rows > 0 {
        out.push_str("<thead>");
        emit_rows(&mut out, 0..grid.head_rows);
        out.push_str("</thead>");
    }
    if grid.rows > grid.head_rows {
        out.push_str("<tbody>");
        emit_rows(&mut out, grid.head_rows..grid.rows);
        out.push_str("</tbody>");
    }
    out.push_str("</table>");
    out
}

fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(c),
        }
    }
    out
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let entity = rest.find(';').filter(|&end| end <= 10).map(|end| (&rest[1..end], end));
        let decoded = entity.and_then(|(name, end)| {
            let c = match name {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some('\u{a0}'),
                n if n.starts_with("#x") || n.starts_with("#X") => {
                    u32::from_str_radix(&n[2..], 16).ok().and_then(char::from_u32)
                }
                n if n.starts_with('#') => n[1..].parse().ok().and_then(char::from_u32),
                _ => None,
            };
            c.map(|c| (c, end))
        });
        match decoded {
            Some((c, end)) => {
                out.push(c);
                rest = &rest[end + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

enum Item<'a> {
    Text(&'a str),
    Open { name: String, attrs: Vec<(String, String)> },
    Close(String),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_item(&mut self) -> Result<Option<Item<'a>>, TableError> {
        let rest = &self.src[self.pos..];
        if rest.is_empty() {
            return Ok(None);
        }
        if !rest.starts_with('<') {
            let end = rest.find('<').unwrap_or(rest.len());
            self.pos += end;
            return Ok(Some(Item::Text(&rest[..end])));
        }
        let end = tag_end(rest).ok_or_else(|| invalid("unterminated tag"))?;
        self.pos += end + 1;
        parse_tag(&rest[1..end]).map(Some)
    }

    /// Raw content up to the matching `</td>` / `</th>`; structural tags
    /// inside a cell mean the cell was never closed.
    fn cell_content(&mut self, tag: &str) -> Result<&'a str, TableError> {
        let start = self.pos;
        loop {
            let rest = &self.src[self.pos..];
            let lt = rest.find('<').ok_or_else(|| invalid(format!("unclosed <{tag}>")))?;
            self.pos += lt;
            let rest = &self.src[self.pos..];
            let end = tag_end(rest).ok_or_else(|| invalid("unterminated tag"))?;
            match parse_tag(&rest[1..end]) {
                Ok(Item::Close(name)) if name == tag => {
                    let content = &self.src[start..self.pos];
                    self.pos += end + 1;
                    return Ok(content);
                }
                Ok(Item::Close(name) | Item::Open { name, .. }) if is_structural(&name) => {
                    return Err(invalid(format!("unclosed <{tag}>")));
                }
                _ => self.pos += end + 1,
            }
        }
    }
}

fn is_structural(name: &str) -> bool {
    matches!(name, "table" | "thead" | "tbody" | "tfoot" | "tr" | "td" | "th")
}

/// Index of the `>` closing the tag at the start of `s`, honouring quotes.
fn tag_end(s: &str) -> Option<usize> {
    let mut quote: Option<char> = None;
    for (i, c) in s.char_indices().skip(1) {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '"' | '\'') => quote = Some(c),
            (None, '>') => return Some(i),
            (None, '<') => return None,
            _ => {}
        }
    }
    None
}

fn parse_tag(inner: &str) -> Result<Item<'static>, TableError> {
    let inner = inner.trim();
    if let Some(name) = inner.strip_prefix('/') {
        return Ok(Item::Close(name.trim().to_ascii_lowercase()));
    }
    let inner = inner.strip_suffix('/').map_or(inner, str::trim_end);
    let name_end = inner.find(char::is_whitespace).unwrap_or(inner.len());
    let name = inner[..name_end].to_ascii_lowercase();
    if name.is_empty() {
        return Err(invalid("empty tag"));
    }
    let attrs = parse_attrs(&inner[name_end..])?;
    Ok(Item::Open { name, attrs })
}

fn parse_attrs(mut s: &str) -> Result<Vec<(String, String)>, TableError> {
    let mut attrs = Vec::new();
    loop {
        s = s.trim_start();
        if s.is_empty() {
            return Ok(attrs);
        }
        let key_end = s.find(|c: char| c == '=' || c.is_whitespace()).unwrap_or(s.len());
        let key = s[..key_end].to_ascii_lowercase();
        s = s[key_end..].trim_start();
        let Some(after_eq) = s.strip_prefix('=') else {
            attrs.push((key, String::new()));
            continue;
        };
        let after_eq = after_eq.trim_start();
        let (value, rest) = match after_eq.chars().next() {
            Some(q @ ('"' | '\'')) => {
                let close = after_eq[1..].find(q).ok_or_else(|| invalid("unterminated attribute value"))?;
                (&after_eq[1..1 + close], &after_eq[close + 2..])
            }
            _ => {
                let end = after_eq.find(char::is_whitespace).unwrap_or(after_eq.len());
                (&after_eq[..end], &after_eq[end..])
            }
        };
        attrs.push((key, value.to_string()));
        s = rest;
    }
}

/// Why a training example is dropped.
#[derive(Debug, Clone, PartialEq)]
pub enum SkipReason {
    Structure(String),
    OutOfFrame { cell: usize },
    Overlap { first: usize, second: usize, iou: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Validity {
    Valid,
    Skip(SkipReason),
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipReason::Structure(msg) => write!(f, "invalid structure: {msg}"),
            SkipReason::OutOfFrame { cell } => write!(f, "cell {cell} box extends outside the image frame"),
            SkipReason::Overlap { first, second, iou } => {
                write!(f, "cell boxes {first} and {second} overlap (IoU {iou:.4})")
            }
        }
    }
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ValidationConfig {
    /// Cell-box pairs with IoU strictly above this are overlapping.
    pub overlap_tolerance: f64,
    /// Allowed overshoot past the image frame in normalized square units.
    pub frame_tolerance: f64,
    pub anchor: PadAnchor,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        // one location bin: edge-quantized right/bottom borders can overshoot by < 1 bin
        Self { overlap_tolerance: 0.0, frame_tolerance: 1.0 / f64::from(NUM_LOC_BINS), anchor: PadAnchor::TopLeft }
    }
}

/// Checks that every cell box stays inside the original image frame and that
/// no two cell boxes overlap.
pub fn validate_table_example(grid: &TableGrid, size: ImageSize, cfg: &ValidationConfig) -> Validity {
    let transform = PadTransform::new(size, cfg.anchor);
    let side = f64::from(transform.square_side_px());
    let slack = cfg.frame_tolerance * side;
    let (w, h) = (f64::from(size.width_px()), f64::from(size.height_px()));
    let boxed: Vec<(usize, &Box2D)> =
        grid.cells().iter().enumerate().filter_map(|(i, c)| c.bbox.as_ref().map(|b| (i, b))).collect();
    for &(i, b) in &boxed {
        let px = transform.unpad_unclamped(b);
        if px.x_min < -slack || px.y_min < -slack || px.x_max > w + slack || px.y_max > h + slack {
            return Validity::Skip(SkipReason::OutOfFrame { cell: i });
        }
    }
    for (k, &(i, a)) in boxed.iter().enumerate() {
        for &(j, b) in &boxed[k + 1..] {
            let overlap = iou(a, b);
            if overlap > cfg.overlap_tolerance {
                return Validity::Skip(SkipReason::Overlap { first: i, second: j, iou: overlap });
            }
        }
    }
    Validity::Valid
}

/// Parses and validates in one step; parse failures become `Skip(Structure)`.
pub fn validate_table_html(html: &str, size: ImageSize, opts: &TableParseOptions, cfg: &ValidationConfig) -> Validity {
    match parse_table_html_with(html, opts) {
        Ok(grid) => validate_table_example(&grid, size, cfg),
        Err(e) => Validity::Skip(SkipReason::Structure(e.to_string())),
    }
}
