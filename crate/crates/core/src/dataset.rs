//! CSV ingestion, discretization, binarization and the bitmap index.
//!
//! Every `(column, value)` pair observed in the input becomes one item. Continuous
//! columns are first cut into equal-width bins over their observed `[min, max]`;
//! the last bin is closed on the right so the maximum lands in it.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bitmap::Bitmap;
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_MISSING: &str = "?";

const MATRIX_MAGIC: &[u8; 4] = b"CEAB";
const MATRIX_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Categorical,
}

/// Column-kind declarations. Columns without an explicit kind fall back to
/// `default_kind`, or are inferred (continuous iff every present value parses
/// as a number) when that is `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default)]
    pub default_kind: Option<ColumnKind>,
    #[serde(default)]
    pub columns: BTreeMap<String, ColumnKind>,
}

impl Schema {
    pub fn infer() -> Self {
        Schema::default()
    }

    pub fn with_column(mut self, name: impl Into<String>, kind: ColumnKind) -> Self {
        self.columns.insert(name.into(), kind);
        self
    }

    pub fn all(kind: ColumnKind) -> Self {
        Schema {
            default_kind: Some(kind),
            columns: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarizeOptions {
    pub schema: Schema,
    pub bins: usize,
    pub missing: String,
    /// Emit an item for every bin, including bins no row falls into.
    pub keep_empty_bins: bool,
}

impl Default for BinarizeOptions {
    fn default() -> Self {
        BinarizeOptions {
            schema: Schema::infer(),
            bins: DEFAULT_BINS,
            missing: DEFAULT_MISSING.to_string(),
            keep_empty_bins: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// Pre-binarization table. `None` cells are missing values.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Option<String>>>,
}

impl RawTable {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Reads a headed CSV, resolving column kinds against `schema`.
    pub fn from_csv<R: Read>(source: R, schema: &Schema, missing: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for name in schema.columns.keys() {
            if !header.contains(name) {
                return Err(Error::config(format!(
                    "schema names unknown column `{name}`"
                )));
            }
        }

        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row_no = i + 1;
            let record = record.map_err(|e| Error::Parse {
                row: row_no,
                message: e.to_string(),
            })?;
            if record.len() != header.len() {
                return Err(Error::Parse {
                    row: row_no,
                    message: format!("expected {} fields, found {}", header.len(), record.len()),
                });
            }
            let cells: Vec<Option<String>> = record
                .iter()
                .map(|v| (!v.is_empty() && v != missing).then(|| v.to_string()))
                .collect();
            if cells.iter().all(Option::is_none) {
                continue;
            }
            rows.push(cells);
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }

        let mut columns = Vec::with_capacity(header.len());
        for (ci, name) in header.into_iter().enumerate() {
            let declared = schema.columns.get(&name).copied().or(schema.default_kind);
            let kind = match declared {
                Some(k) => k,
                None => {
                    let mut present = rows.iter().filter_map(|r| r[ci].as_deref()).peekable();
                    if present.peek().is_some() && present.all(|v| v.parse::<f64>().is_ok()) {
                        ColumnKind::Continuous
                    } else {
                        ColumnKind::Categorical
                    }
                }
            };
            if kind == ColumnKind::Continuous {
                for (ri, row) in rows.iter().enumerate() {
                    if let Some(v) = &row[ci] {
                        if v.parse::<f64>().map(f64::is_finite) != Ok(true) {
                            return Err(Error::Parse {
                                row: ri + 1,
                                message: format!("column `{name}`: `{v}` is not a number"),
                            });
                        }
                    }
                }
            }
            columns.push(Column { name, kind });
        }
        Ok(RawTable { columns, rows })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub column: String,
    pub value: String,
    pub item_index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemCatalog {
    items: Vec<CatalogEntry>,
}

impl ItemCatalog {
    pub fn new(items: impl IntoIterator<Item = (String, String)>) -> Self {
        let items = items
            .into_iter()
            .enumerate()
            .map(|(item_index, (column, value))| CatalogEntry {
                column,
                value,
                item_index,
            })
            .collect();
        ItemCatalog { items }
    }

    /// Anonymous catalog `item_0 .. item_{n-1}`, handy for synthetic databases.
    pub fn anonymous(n: usize) -> Self {
        ItemCatalog::new((0..n).map(|i| ("item".to_string(), i.to_string())))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.items
    }

    pub fn get(&self, item: usize) -> Option<&CatalogEntry> {
        self.items.get(item)
    }

    pub fn label(&self, item: usize) -> String {
        match self.items.get(item) {
            Some(e) => format!("{}={}", e.column, e.value),
            None => format!("#{item}"),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let catalog: ItemCatalog = serde_json::from_str(s)?;
        for (i, e) in catalog.items.iter().enumerate() {
            if e.item_index != i {
                return Err(Error::config(format!(
                    "catalog entry {i} carries item_index {}",
                    e.item_index
                )));
            }
        }
        Ok(catalog)
    }
}

/// Immutable binarized dataset: one row bitmap per item.
#[derive(Clone, Debug, PartialEq)]
pub struct TransactionDb {
    catalog: ItemCatalog,
    bitmaps: Vec<Bitmap>,
    row_count: usize,
}

/// Support counts of `A`, `C` and `A ∪ C` for one rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct RuleCounts {
    pub antecedent: usize,
    pub consequent: usize,
    pub joint: usize,
    pub rows: usize,
}

impl TransactionDb {
    pub fn new(catalog: ItemCatalog, bitmaps: Vec<Bitmap>, row_count: usize) -> Result<Self> {
        if row_count == 0 {
            return Err(Error::EmptyDataset);
        }
        if catalog.len() != bitmaps.len() {
            return Err(Error::contract(format!(
                "catalog has {} items but {} bitmaps were given",
                catalog.len(),
                bitmaps.len()
            )));
        }
        if catalog.len() < 2 {
            return Err(Error::contract(format!(
                "at least two items are required, found {}",
                catalog.len()
            )));
        }
        if let Some(i) = bitmaps.iter().position(|b| b.len() != row_count) {
            return Err(Error::contract(format!(
                "bitmap {i} has {} positions, expected {row_count}",
                bitmaps[i].len()
            )));
        }
        Ok(TransactionDb {
            catalog,
            bitmaps,
            row_count,
        })
    }

    /// Builds a database from per-item row lists with an anonymous catalog.
    pub fn from_item_rows(row_count: usize, items: &[Vec<usize>]) -> Result<Self> {
        let bitmaps = items
            .iter()
            .map(|rows| {
                if let Some(&r) = rows.iter().find(|&&r| r >= row_count) {
                    return Err(Error::contract(format!("row {r} out of range")));
                }
                Ok(Bitmap::from_rows(row_count, rows.iter().copied()))
            })
            .collect::<Result<Vec<_>>>()?;
        TransactionDb::new(ItemCatalog::anonymous(items.len()), bitmaps, row_count)
    }

    pub fn catalog(&self) -> &ItemCatalog {
        &self.catalog
    }

    pub fn item_count(&self) -> usize {
        self.bitmaps.len()
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn bitmap(&self, item: usize) -> Option<&Bitmap> {
        self.bitmaps.get(item)
    }

    pub fn bitmaps(&self) -> &[Bitmap] {
        &self.bitmaps
    }

    fn check_items(&self, items: &[usize]) -> Result<()> {
        match items.iter().find(|&&i| i >= self.bitmaps.len()) {
            Some(i) => Err(Error::contract(format!(
                "item {i} out of range for {} items",
                self.bitmaps.len()
            ))),
            None => Ok(()),
        }
    }

    /// Rows containing every item of `items`; the empty set selects all rows.
    pub fn item_rows(&self, items: &[usize]) -> Result<Bitmap> {
        self.check_items(items)?;
        let mut acc = Bitmap::ones(self.row_count);
        for &i in items {
            acc.and_assign(&self.bitmaps[i]);
        }
        Ok(acc)
    }

    /// Single pass over the words computing `|rows(A)|`, `|rows(C)|` and `|rows(A ∪ C)|`.
    pub fn rule_counts(&self, antecedent: &[usize], consequent: &[usize]) -> Result<RuleCounts> {
        self.check_items(antecedent)?;
        self.check_items(consequent)?;
        let n_words = self.row_count.div_ceil(64);
        let tail = match self.row_count % 64 {
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        };
        let (mut na, mut nc, mut nac) = (0usize, 0usize, 0usize);
        for w in 0..n_words {
            let mask = if w + 1 == n_words { tail } else { u64::MAX };
            let a = antecedent
                .iter()
                .fold(mask, |acc, &i| acc & self.bitmaps[i].words()[w]);
            let c = consequent
                .iter()
                .fold(mask, |acc, &i| acc & self.bitmaps[i].words()[w]);
            na += a.count_ones() as usize;
            nc += c.count_ones() as usize;
            nac += (a & c).count_ones() as usize;
        }
        Ok(RuleCounts {
            antecedent: na,
            consequent: nc,
            joint: nac,
            rows: self.row_count,
        })
    }

    /// Writes the compact little-endian matrix cache.
    pub fn write_matrix<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(MATRIX_MAGIC)?;
        out.write_all(&MATRIX_VERSION.to_le_bytes())?;
        out.write_all(&(self.row_count as u64).to_le_bytes())?;
        out.write_all(&(self.bitmaps.len() as u64).to_le_bytes())?;
        for b in &self.bitmaps {
            for w in b.words() {
                out.write_all(&w.to_le_bytes())?;
            }
        }
        out.flush()
    }

    pub fn read_matrix<R: Read>(catalog: ItemCatalog, mut input: R) -> Result<Self> {
        let bad = |m: &str| Error::config(format!("matrix cache: {m}"));
        let mut magic = [0u8; 4];
        let mut u32buf = [0u8; 4];
        let mut u64buf = [0u8; 8];
        input
            .read_exact(&mut magic)
            .map_err(|_| bad("truncated header"))?;
        if &magic != MATRIX_MAGIC {
            return Err(bad("bad magic"));
        }
        input
            .read_exact(&mut u32buf)
            .map_err(|_| bad("truncated header"))?;
        if u32::from_le_bytes(u32buf) != MATRIX_VERSION {
            return Err(bad("unsupported version"));
        }
        input
            .read_exact(&mut u64buf)
            .map_err(|_| bad("truncated header"))?;
        let rows = u64::from_le_bytes(u64buf) as usize;
        input
            .read_exact(&mut u64buf)
            .map_err(|_| bad("truncated header"))?;
        let items = u64::from_le_bytes(u64buf) as usize;
        if items != catalog.len() {
            return Err(bad("item count does not match catalog"));
        }
        let n_words = rows.div_ceil(64);
        let mut bitmaps = Vec::with_capacity(items);
        for _ in 0..items {
            let mut words = Vec::with_capacity(n_words);
            for _ in 0..n_words {
                input
                    .read_exact(&mut u64buf)
                    .map_err(|_| bad("truncated body"))?;
                words.push(u64::from_le_bytes(u64buf));
            }
            bitmaps.push(Bitmap::from_words(rows, words).ok_or_else(|| bad("word count"))?);
        }
        TransactionDb::new(catalog, bitmaps, rows)
    }

    /// Writes `catalog.json` and `matrix.bin` into `dir`.
    pub fn save_prepared(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let cat_path = dir.join("catalog.json");
        std::fs::write(&cat_path, self.catalog.to_json()? + "\n")
            .map_err(|e| Error::io(&cat_path, e))?;
        let mat_path = dir.join("matrix.bin");
        let f = File::create(&mat_path).map_err(|e| Error::io(&mat_path, e))?;
        self.write_matrix(BufWriter::new(f))
            .map_err(|e| Error::io(&mat_path, e))
    }

    pub fn load_prepared(dir: &Path) -> Result<Self> {
        let cat_path = dir.join("catalog.json");
        let text = std::fs::read_to_string(&cat_path).map_err(|e| Error::io(&cat_path, e))?;
        let catalog = ItemCatalog::from_json(&text)?;
        let mat_path = dir.join("matrix.bin");
        let f = File::open(&mat_path).map_err(|e| Error::io(&mat_path, e))?;
        TransactionDb::read_matrix(catalog, BufReader::new(f))
    }
}

fn fmt_edge(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Equal-width bin index of `v` over `[min, max]`, last bin right-closed.
pub fn bin_index(v: f64, min: f64, max: f64, bins: usize) -> usize {
    if max <= min {
        return 0;
    }
    let width = (max - min) / bins as f64;
    let idx = ((v - min) / width).floor();
    if idx < 0.0 {
        0
    } else {
        (idx as usize).min(bins - 1)
    }
}

/// Turns a raw table into a bitmap-indexed transaction database.
pub fn binarize(table: &RawTable, opts: &BinarizeOptions) -> Result<TransactionDb> {
    if opts.bins == 0 {
        return Err(Error::config("bin count must be positive"));
    }
    let n_rows = table.row_count();
    if n_rows == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut labels = Vec::new();
    let mut bitmaps = Vec::new();

    for (ci, col) in table.columns.iter().enumerate() {
        match col.kind {
            ColumnKind::Categorical => {
                let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
                for (ri, row) in table.rows.iter().enumerate() {
                    if let Some(v) = &row[ci] {
                        groups.entry(v.as_str()).or_default().push(ri);
                    }
                }
                for (value, rows) in groups {
                    labels.push((col.name.clone(), value.to_string()));
                    bitmaps.push(Bitmap::from_rows(n_rows, rows));
                }
            }
            ColumnKind::Continuous => {
                let values: Vec<(usize, f64)> = table
                    .rows
                    .iter()
                    .enumerate()
                    .filter_map(|(ri, row)| {
                        row[ci]
                            .as_deref()
                            .map(|v| (ri, v.parse::<f64>().unwrap_or(f64::NAN)))
                    })
                    .collect();
                if values.is_empty() {
                    continue;
                }
                let min = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
                let max = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
                // a constant column collapses to one bin
                let n_bins = if max > min { opts.bins } else { 1 };
                let mut bins: Vec<Vec<usize>> = vec![Vec::new(); n_bins];
                for &(ri, v) in &values {
                    bins[bin_index(v, min, max, n_bins)].push(ri);
                }
                let width = (max - min) / n_bins as f64;
                for (b, rows) in bins.into_iter().enumerate() {
                    if rows.is_empty() && !opts.keep_empty_bins {
                        continue;
                    }
                    let lo = min + width * b as f64;
                    let label = if b + 1 == n_bins {
                        format!("[{}, {}]", fmt_edge(lo), fmt_edge(max))
                    } else {
                        format!(
                            "[{}, {})",
                            fmt_edge(lo),
                            fmt_edge(min + width * (b + 1) as f64)
                        )
                    };
                    labels.push((col.name.clone(), label));
                    bitmaps.push(Bitmap::from_rows(n_rows, rows));
                }
            }
        }
    }
    // duplicate labels can only arise from two equally named columns
    let distinct: BTreeSet<_> = labels.iter().collect();
    if distinct.len() != labels.len() {
        return Err(Error::config("duplicate column names in header"));
    }
    TransactionDb::new(ItemCatalog::new(labels), bitmaps, n_rows)
}

pub fn load_and_binarize<R: Read>(source: R, opts: &BinarizeOptions) -> Result<TransactionDb> {
    let table = RawTable::from_csv(source, &opts.schema, &opts.missing)?;
    binarize(&table, opts)
}

pub fn load_csv_file(path: &Path, opts: &BinarizeOptions) -> Result<TransactionDb> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    load_and_binarize(BufReader::new(f), opts)
}
