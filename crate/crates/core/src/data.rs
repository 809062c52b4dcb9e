//! Typed data sources read by program operands.
//!
//! Every operand a program reads goes through a [`DataSource`]: either the
//! program's private [`RegisterFile`] or a read-only [`StateSource`] exposed by
//! the learning environment. A source stores values in one native element kind
//! and can serve other operand types on the fly:
//!
//! * integer sources serve `f64` (and `i8` sources serve `i64`) by exact widening;
//!   `f64` sources never serve integer types;
//! * `T[n]` vectors are `n` consecutive elements of the row-major storage;
//! * `T[h][w]` matrices are fully contained windows of a 2D source, anchored at
//!   their top-left cell. Anchors are numbered row-major over the valid anchors
//!   only, so location `k` of a 3×3 window over an 8×8 source is the anchor
//!   `(k / 6, k % 6)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Element kind of an operand or of a source's native storage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ElementKind {
    F64,
    I64,
    I8,
}

impl ElementKind {
    /// True when a native element of `self` can be read as `requested` without loss.
    pub fn converts_to(self, requested: ElementKind) -> bool {
        self == requested
            || requested == ElementKind::F64
            || (self == ElementKind::I8 && requested == ElementKind::I64)
    }

    fn token(self) -> &'static str {
        match self {
            ElementKind::F64 => "f64",
            ElementKind::I64 => "i64",
            ElementKind::I8 => "i8",
        }
    }
}

/// Shape of an operand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Scalar,
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    pub fn element_count(self) -> usize {
        match self {
            Shape::Scalar => 1,
            Shape::Vector(n) => n,
            Shape::Matrix(h, w) => h * w,
        }
    }
}

/// Type of an instruction operand: element kind plus shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OperandType {
    kind: ElementKind,
    shape: Shape,
}

impl OperandType {
    pub const F64: OperandType = OperandType::scalar(ElementKind::F64);
    pub const I64: OperandType = OperandType::scalar(ElementKind::I64);
    pub const I8: OperandType = OperandType::scalar(ElementKind::I8);

    pub const fn scalar(kind: ElementKind) -> Self {
        Self {
            kind,
            shape: Shape::Scalar,
        }
    }

    /// Fails when any dimension is zero.
    pub fn new(kind: ElementKind, shape: Shape) -> Result<Self, DataError> {
        let ok = match shape {
            Shape::Scalar => true,
            Shape::Vector(n) => n >= 1,
            Shape::Matrix(h, w) => h >= 1 && w >= 1,
        };
        if ok {
            Ok(Self { kind, shape })
        } else {
            Err(DataError::InvalidShape(format!("{kind:?} {shape:?}")))
        }
    }

    /// Panics when `len == 0`.
    pub fn vector(kind: ElementKind, len: usize) -> Self {
        Self::new(kind, Shape::Vector(len)).expect("vector operand of length 0")
    }

    /// Panics when a dimension is 0.
    pub fn matrix(kind: ElementKind, rows: usize, cols: usize) -> Self {
        Self::new(kind, Shape::Matrix(rows, cols)).expect("matrix operand with a zero dimension")
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }
}

impl fmt::Display for OperandType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.token())?;
        match self.shape {
            Shape::Scalar => Ok(()),
            Shape::Vector(n) => write!(f, "[{n}]"),
            Shape::Matrix(h, w) => write!(f, "[{h}][{w}]"),
        }
    }
}

impl FromStr for OperandType {
    type Err = DataError;

    /// Parses `f64`, `i8[9]`, `i8[3][3]`, ...
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DataError::InvalidShape(s.to_string());
        let (head, dims) = match s.find('[') {
            Some(i) => (&s[..i], &s[i..]),
            None => (s, ""),
        };
        let kind = match head {
            "f64" => ElementKind::F64,
            "i64" => ElementKind::I64,
            "i8" => ElementKind::I8,
            _ => return Err(bad()),
        };
        let mut sizes = Vec::new();
        let mut rest = dims;
        while !rest.is_empty() {
            let inner = rest.strip_prefix('[').ok_or_else(bad)?;
            let close = inner.find(']').ok_or_else(bad)?;
            sizes.push(inner[..close].parse::<usize>().map_err(|_| bad())?);
            rest = &inner[close + 1..];
        }
        let shape = match sizes[..] {
            [] => Shape::Scalar,
            [n] => Shape::Vector(n),
            [h, w] => Shape::Matrix(h, w),
            _ => return Err(bad()),
        };
        OperandType::new(kind, shape)
    }
}

/// Native storage of a source, or the payload of an array operand.
#[derive(Clone, Debug, PartialEq)]
pub enum NativeData {
    F64(Vec<f64>),
    I64(Vec<i64>),
    I8(Vec<i8>),
}

impl NativeData {
    pub fn kind(&self) -> ElementKind {
        match self {
            NativeData::F64(_) => ElementKind::F64,
            NativeData::I64(_) => ElementKind::I64,
            NativeData::I8(_) => ElementKind::I8,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            NativeData::F64(v) => v.len(),
            NativeData::I64(v) => v.len(),
            NativeData::I8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn element_f64(&self, i: usize) -> f64 {
        match self {
            NativeData::F64(v) => v[i],
            NativeData::I64(v) => v[i] as f64,
            NativeData::I8(v) => f64::from(v[i]),
        }
    }

    fn element_i64(&self, i: usize) -> i64 {
        match self {
            NativeData::I64(v) => v[i],
            NativeData::I8(v) => i64::from(v[i]),
            NativeData::F64(_) => unreachable!("f64 sources never serve integers"),
        }
    }

    fn element_i8(&self, i: usize) -> i8 {
        match self {
            NativeData::I8(v) => v[i],
            _ => unreachable!("only i8 sources serve i8"),
        }
    }

    /// Gathers `indices` converted to `kind`.
    fn gather(&self, kind: ElementKind, indices: impl Iterator<Item = usize>) -> NativeData {
        match kind {
            ElementKind::F64 => NativeData::F64(indices.map(|i| self.element_f64(i)).collect()),
            ElementKind::I64 => NativeData::I64(indices.map(|i| self.element_i64(i)).collect()),
            ElementKind::I8 => NativeData::I8(indices.map(|i| self.element_i8(i)).collect()),
        }
    }
}

/// A typed operand value handed to an instruction.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    F64(f64),
    I64(i64),
    I8(i8),
    Array { shape: Shape, data: NativeData },
}

impl Value {
    pub fn operand_type(&self) -> OperandType {
        match self {
            Value::F64(_) => OperandType::F64,
            Value::I64(_) => OperandType::I64,
            Value::I8(_) => OperandType::I8,
            Value::Array { shape, data } => OperandType {
                kind: data.kind(),
                shape: *shape,
            },
        }
    }

    /// Scalar numeric value widened to `f64`; `None` for arrays.
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::F64(v) => Some(v),
            Value::I64(v) => Some(v as f64),
            Value::I8(v) => Some(f64::from(v)),
            Value::Array { .. } => None,
        }
    }

    /// Array elements widened to `f64` in row-major order; scalars yield one element.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        match self {
            Value::Array { data, .. } => (0..data.len()).map(|i| data.element_f64(i)).collect(),
            scalar => vec![scalar.as_f64().unwrap()],
        }
    }
}

/// Native layout of a source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NativeShape {
    Flat(usize),
    Grid(usize, usize),
}

impl NativeShape {
    pub fn len(self) -> usize {
        match self {
            NativeShape::Flat(n) => n,
            NativeShape::Grid(h, w) => h * w,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Access {
    ReadOnly,
    ReadWrite,
}

/// Static description of a source: what it stores and how it is laid out.
///
/// Everything about addressing depends only on the descriptor, so mutation can
/// draw valid addresses without touching any live data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SourceDescriptor {
    pub kind: ElementKind,
    pub shape: NativeShape,
    pub access: Access,
}

impl SourceDescriptor {
    pub fn read_only(kind: ElementKind, shape: NativeShape) -> Self {
        Self {
            kind,
            shape,
            access: Access::ReadOnly,
        }
    }

    /// Number of valid locations for `ty`; 0 when the source never serves it.
    pub fn addressable_count(&self, ty: &OperandType) -> usize {
        if !self.kind.converts_to(ty.kind) {
            return 0;
        }
        let len = self.shape.len();
        match ty.shape {
            Shape::Scalar => len,
            Shape::Vector(n) => (len + 1).saturating_sub(n),
            Shape::Matrix(h, w) => match self.shape {
                NativeShape::Grid(rows, cols) if h <= rows && w <= cols => {
                    (rows - h + 1) * (cols - w + 1)
                }
                _ => 0,
            },
        }
    }

    pub fn can_provide(&self, ty: &OperandType, location: usize) -> bool {
        location < self.addressable_count(ty)
    }

    /// Short textual form used in graph file headers, e.g. `i8[3][3]`.
    pub fn layout_token(&self) -> String {
        let shape = match self.shape {
            NativeShape::Flat(n) => Shape::Vector(n),
            NativeShape::Grid(h, w) => Shape::Matrix(h, w),
        };
        OperandType {
            kind: self.kind,
            shape,
        }
        .to_string()
    }

    /// Inverse of [`layout_token`](Self::layout_token); the result is read-only.
    pub fn parse_layout_token(token: &str) -> Result<Self, DataError> {
        let ty: OperandType = token.parse()?;
        let shape = match ty.shape {
            Shape::Vector(n) => NativeShape::Flat(n),
            Shape::Matrix(h, w) => NativeShape::Grid(h, w),
            Shape::Scalar => NativeShape::Flat(1),
        };
        Ok(Self::read_only(ty.kind, shape))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("operand unavailable: source {source_id} cannot provide {ty} at location {location}")]
    OperandUnavailable {
        source_id: usize,
        ty: OperandType,
        location: usize,
    },
    #[error("register out of range: index {index} for {count} registers")]
    RegisterOutOfRange { index: usize, count: usize },
    #[error("source {0} is read-only")]
    ReadOnly(usize),
    #[error("unknown data source {0}")]
    UnknownSource(usize),
    #[error("invalid operand type or shape: {0}")]
    InvalidShape(String),
    #[error("native data does not match its descriptor: {0}")]
    LayoutMismatch(String),
}

/// Reads `ty` at `location` from `data` laid out as `desc`.
fn read(
    source_id: usize,
    desc: &SourceDescriptor,
    data: &NativeData,
    ty: &OperandType,
    location: usize,
) -> Result<Value, DataError> {
    // Hot path: scalar float from float storage.
    if let (Shape::Scalar, NativeData::F64(values)) = (ty.shape, data) {
        if ty.kind == ElementKind::F64 {
            return values.get(location).map(|v| Value::F64(*v)).ok_or(
                DataError::OperandUnavailable {
                    source_id,
                    ty: *ty,
                    location,
                },
            );
        }
    }
    if !desc.can_provide(ty, location) {
        return Err(DataError::OperandUnavailable {
            source_id,
            ty: *ty,
            location,
        });
    }
    let value = match ty.shape {
        Shape::Scalar => match ty.kind {
            ElementKind::F64 => Value::F64(data.element_f64(location)),
            ElementKind::I64 => Value::I64(data.element_i64(location)),
            ElementKind::I8 => Value::I8(data.element_i8(location)),
        },
        Shape::Vector(n) => Value::Array {
            shape: ty.shape,
            data: data.gather(ty.kind, location..location + n),
        },
        Shape::Matrix(h, w) => {
            let NativeShape::Grid(_, cols) = desc.shape else {
                unreachable!("can_provide rejects matrix reads from flat sources")
            };
            let anchors_per_row = cols - w + 1;
            let (row, col) = (location / anchors_per_row, location % anchors_per_row);
            let indices = (row..row + h).flat_map(|r| (col..col + w).map(move |c| r * cols + c));
            Value::Array {
                shape: ty.shape,
                data: data.gather(ty.kind, indices),
            }
        }
    };
    Ok(value)
}

/// Uniform access to typed operand data.
pub trait DataSource {
    fn descriptor(&self) -> &SourceDescriptor;

    fn native(&self) -> &NativeData;

    fn addressable_count(&self, ty: &OperandType) -> usize {
        self.descriptor().addressable_count(ty)
    }

    fn can_provide(&self, ty: &OperandType, location: usize) -> bool {
        self.descriptor().can_provide(ty, location)
    }

    /// Reads `ty` at `location`, converting or windowing as needed.
    fn get_data(&self, ty: &OperandType, location: usize) -> Result<Value, DataError>;

    /// Writes a float result at `location`.
    fn set_data(&mut self, location: usize, value: f64) -> Result<(), DataError>;
}

/// Private register file of an executing program. Register 0 holds the result.
#[derive(Clone, Debug, PartialEq)]
pub struct RegisterFile {
    desc: SourceDescriptor,
    values: NativeData,
}

/// Index of the register holding a program's result.
pub const RESULT_REGISTER: usize = 0;

/// Default register count.
pub const DEFAULT_REGISTERS: usize = 8;

impl RegisterFile {
    pub fn new(count: usize) -> Self {
        Self {
            desc: SourceDescriptor {
                kind: ElementKind::F64,
                shape: NativeShape::Flat(count),
                access: Access::ReadWrite,
            },
            values: NativeData::F64(vec![0.0; count]),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fills every register with 0.0.
    pub fn reset(&mut self) {
        self.registers_mut().fill(0.0);
    }

    pub fn set_register(&mut self, index: usize, value: f64) -> Result<(), DataError> {
        let count = self.len();
        match self.registers_mut().get_mut(index) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(DataError::RegisterOutOfRange { index, count }),
        }
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.registers().get(index).copied()
    }

    pub fn result(&self) -> f64 {
        self.registers()[RESULT_REGISTER]
    }

    pub fn registers(&self) -> &[f64] {
        match &self.values {
            NativeData::F64(v) => v,
            _ => unreachable!(),
        }
    }

    fn registers_mut(&mut self) -> &mut [f64] {
        match &mut self.values {
            NativeData::F64(v) => v,
            _ => unreachable!(),
        }
    }
}

impl DataSource for RegisterFile {
    fn descriptor(&self) -> &SourceDescriptor {
        &self.desc
    }

    fn native(&self) -> &NativeData {
        &self.values
    }

    fn get_data(&self, ty: &OperandType, location: usize) -> Result<Value, DataError> {
        read(0, &self.desc, &self.values, ty, location)
    }

    fn set_data(&mut self, location: usize, value: f64) -> Result<(), DataError> {
        self.set_register(location, value)
    }
}

/// Read-only view of (part of) an environment state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSource {
    desc: SourceDescriptor,
    data: NativeData,
}

impl StateSource {
    pub fn new(shape: NativeShape, data: NativeData) -> Result<Self, DataError> {
        if shape.len() != data.len() {
            return Err(DataError::LayoutMismatch(format!(
                "shape holds {} elements, data has {}",
                shape.len(),
                data.len()
            )));
        }
        Ok(Self {
            desc: SourceDescriptor::read_only(data.kind(), shape),
            data,
        })
    }

    /// Mutable access for the owning environment; programs go through [`DataSource`].
    pub fn native_mut(&mut self) -> &mut NativeData {
        &mut self.data
    }
}

impl DataSource for StateSource {
    fn descriptor(&self) -> &SourceDescriptor {
        &self.desc
    }

    fn native(&self) -> &NativeData {
        &self.data
    }

    fn get_data(&self, ty: &OperandType, location: usize) -> Result<Value, DataError> {
        // Source id is resolved by the caller; report the location only.
        read(usize::MAX, &self.desc, &self.data, ty, location)
    }

    fn set_data(&mut self, _location: usize, _value: f64) -> Result<(), DataError> {
        Err(DataError::ReadOnly(usize::MAX))
    }
}

/// A copy of every state source of an environment at one instant.
pub type Snapshot = Vec<StateSource>;

/// Where a line reads an operand: source id (0 = registers) plus location.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address {
    pub source: usize,
    pub location: usize,
}

impl Address {
    pub fn new(source: usize, location: usize) -> Self {
        Self { source, location }
    }
}

/// Layout of the data visible to programs: the register file (id 0) followed
/// by the environment's state sources (ids 1..).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SourceLayout {
    sources: Vec<SourceDescriptor>,
}

impl SourceLayout {
    pub fn new(registers: usize, environment: impl IntoIterator<Item = SourceDescriptor>) -> Self {
        let mut sources = vec![*RegisterFile::new(registers).descriptor()];
        sources.extend(environment.into_iter().map(|mut d| {
            d.access = Access::ReadOnly;
            d
        }));
        Self { sources }
    }

    /// Layout for `registers` registers plus the given live sources.
    pub fn of(registers: usize, environment: &[StateSource]) -> Self {
        Self::new(registers, environment.iter().map(|s| *s.descriptor()))
    }

    pub fn register_count(&self) -> usize {
        self.sources[0].shape.len()
    }

    pub fn source_count(&self) -> usize {
        self.sources.len()
    }

    pub fn descriptor(&self, source: usize) -> Option<&SourceDescriptor> {
        self.sources.get(source)
    }

    pub fn environment(&self) -> &[SourceDescriptor] {
        &self.sources[1..]
    }

    pub fn addressable_count(&self, source: usize, ty: &OperandType) -> usize {
        self.sources
            .get(source)
            .map_or(0, |d| d.addressable_count(ty))
    }

    pub fn is_valid(&self, address: &Address, ty: &OperandType) -> bool {
        address.location < self.addressable_count(address.source, ty)
    }

    /// Total number of addresses that can serve `ty`, over all sources.
    pub fn total_addressable(&self, ty: &OperandType) -> usize {
        self.sources.iter().map(|d| d.addressable_count(ty)).sum()
    }

    /// Maps a flat index in `0..total_addressable(ty)` onto an address.
    pub fn nth_address(&self, ty: &OperandType, mut index: usize) -> Option<Address> {
        for (source, d) in self.sources.iter().enumerate() {
            let count = d.addressable_count(ty);
            if index < count {
                return Some(Address::new(source, index));
            }
            index -= count;
        }
        None
    }

    /// Checks that `environment` matches this layout's environment part.
    pub fn matches(&self, environment: &[StateSource]) -> bool {
        environment.len() + 1 == self.sources.len()
            && environment
                .iter()
                .zip(&self.sources[1..])
                .all(|(s, d)| s.descriptor().kind == d.kind && s.descriptor().shape == d.shape)
    }
}

/// Everything a program line can read during one execution.
pub struct DataContext<'a> {
    pub registers: &'a mut RegisterFile,
    pub environment: &'a [StateSource],
}

impl DataContext<'_> {
    pub fn get_data(&self, address: &Address, ty: &OperandType) -> Result<Value, DataError> {
        let unavailable = || DataError::OperandUnavailable {
            source_id: address.source,
            ty: *ty,
            location: address.location,
        };
        let result = match address.source {
            0 => self.registers.get_data(ty, address.location),
            s => self
                .environment
                .get(s - 1)
                .ok_or(DataError::UnknownSource(s))?
                .get_data(ty, address.location),
        };
        result.map_err(|e| match e {
            DataError::OperandUnavailable { .. } => unavailable(),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pixels() -> StateSource {
        StateSource::new(
            NativeShape::Grid(8, 8),
            NativeData::I8((0..64).map(|i| i as i8).collect()),
        )
        .unwrap()
    }

    #[test]
    fn int8_scalar_widens_to_f64() {
        let src = pixels();
        assert!(src.can_provide(&OperandType::F64, 5));
        let src = StateSource::new(
            NativeShape::Flat(3),
            NativeData::I8(vec![10, 20, 30]),
        )
        .unwrap();
        assert_eq!(src.get_data(&OperandType::F64, 1).unwrap(), Value::F64(20.0));
        assert_eq!(src.get_data(&OperandType::I64, 2).unwrap(), Value::I64(30));
    }

    #[test]
    fn register_bounds() {
        let mut regs = RegisterFile::new(8);
        assert!(!regs.can_provide(&OperandType::F64, 8));
        assert_eq!(regs.addressable_count(&OperandType::F64), 8);
        regs.set_register(0, 2.5).unwrap();
        assert_eq!(regs.get_data(&OperandType::F64, 0).unwrap(), Value::F64(2.5));
        regs.set_register(7, f64::NAN).unwrap();
        assert!(regs.get(7).unwrap().is_nan());
        assert_eq!(
            regs.set_register(8, 1.0),
            Err(DataError::RegisterOutOfRange { index: 8, count: 8 })
        );
        regs.reset();
        assert!(regs.registers().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn windows_over_grid() {
        let src = pixels();
        let window = OperandType::matrix(ElementKind::I8, 3, 3);
        assert_eq!(src.addressable_count(&window), 36);
        // anchor (5,5) is the last valid one: row 5 * 6 + col 5
        assert!(src.can_provide(&window, 5 * 6 + 5));
        assert!(!src.can_provide(&window, 36));
        let value = src.get_data(&window, 0).unwrap();
        assert_eq!(
            value,
            Value::Array {
                shape: Shape::Matrix(3, 3),
                data: NativeData::I8(vec![0, 1, 2, 8, 9, 10, 16, 17, 18]),
            }
        );
        let float_window = OperandType::matrix(ElementKind::F64, 3, 3);
        assert_eq!(src.addressable_count(&float_window), 36);
        let value = src.get_data(&float_window, 7).unwrap();
        // anchor 7 -> row 1, col 1
        assert_eq!(value.to_f64_vec(), vec![9.0, 10.0, 11.0, 17.0, 18.0, 19.0, 25.0, 26.0, 27.0]);
    }

    #[test]
    fn float_sources_do_not_serve_integers() {
        let regs = RegisterFile::new(4);
        assert_eq!(regs.addressable_count(&OperandType::I8), 0);
        assert_eq!(regs.addressable_count(&OperandType::I64), 0);
        assert!(regs.get_data(&OperandType::I64, 0).is_err());
    }

    #[test]
    fn matrices_need_grid_sources() {
        let src = StateSource::new(NativeShape::Flat(9), NativeData::I8(vec![0; 9])).unwrap();
        assert_eq!(src.addressable_count(&OperandType::matrix(ElementKind::I8, 3, 3)), 0);
        assert_eq!(src.addressable_count(&OperandType::vector(ElementKind::I8, 2)), 8);
    }

    #[test]
    fn state_sources_reject_writes() {
        let mut src = pixels();
        assert!(matches!(src.set_data(0, 1.0), Err(DataError::ReadOnly(_))));
    }

    #[test]
    fn operand_type_text_round_trip() {
        for text in ["f64", "i64", "i8", "i8[2]", "f64[3][3]"] {
            let ty: OperandType = text.parse().unwrap();
            assert_eq!(ty.to_string(), text);
        }
        assert!("i8[0]".parse::<OperandType>().is_err());
        assert!("u8".parse::<OperandType>().is_err());
        assert!("f64[1][2][3]".parse::<OperandType>().is_err());
    }

    #[test]
    fn layout_addresses_enumerate_all_sources() {
        let layout = SourceLayout::of(8, &[pixels()]);
        assert_eq!(layout.total_addressable(&OperandType::F64), 8 + 64);
        assert_eq!(layout.nth_address(&OperandType::F64, 9), Some(Address::new(1, 1)));
        assert_eq!(layout.total_addressable(&OperandType::I8), 64);
        assert_eq!(layout.nth_address(&OperandType::I8, 0), Some(Address::new(1, 0)));
        assert_eq!(layout.nth_address(&OperandType::I8, 64), None);
    }
}
