//! Instructions and instruction sets.
//!
//! An [`Instruction`] declares a typed operand signature and a pure function
//! from operands to an `f64`. Instructions can be built from closures over
//! plain Rust types with [`Instruction::lambda1`], [`Instruction::lambda2`] and
//! [`Instruction::lambda3`]:
//!
//! ```
//! use tpg::instructions::Instruction;
//!
//! let scaled_sum = Instruction::lambda2("scaled_sum", |a: i64, b: [i8; 2]| {
//!     a as f64 * (f64::from(b[0]) + f64::from(b[1]))
//! });
//! assert_eq!(scaled_sum.arity(), 2);
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::data::{ElementKind, NativeData, OperandType, Shape, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstructionError {
    #[error("instruction `{0}` declares no operands")]
    EmptySignature(String),
    #[error("arity/type mismatch for `{name}`: expected ({expected}), got ({got})")]
    SignatureMismatch {
        name: String,
        expected: String,
        got: String,
    },
    #[error("instruction set `{0}` is empty")]
    EmptySet(String),
    #[error("unknown instruction set `{0}`")]
    UnknownSet(String),
}

type EvalFn = dyn Fn(&[Value]) -> f64 + Send + Sync;

/// A typed, pure operation producing an `f64`.
#[derive(Clone)]
pub struct Instruction {
    name: String,
    signature: Vec<OperandType>,
    func: Arc<EvalFn>,
}

impl fmt::Debug for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Instruction")
            .field("name", &self.name)
            .field("signature", &self.signature)
            .finish()
    }
}

impl Instruction {
    /// Builds an instruction from an untyped closure. The closure only ever sees
    /// operand lists that match `signature`.
    pub fn new(
        name: impl Into<String>,
        signature: Vec<OperandType>,
        func: impl Fn(&[Value]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, InstructionError> {
        let name = name.into();
        if signature.is_empty() {
            return Err(InstructionError::EmptySignature(name));
        }
        Ok(Self {
            name,
            signature,
            func: Arc::new(func),
        })
    }

    pub fn lambda1<A: OperandArg>(
        name: impl Into<String>,
        f: impl Fn(A) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, vec![A::operand_type()], move |ops| {
            f(A::from_value(&ops[0]).expect("operand checked against signature"))
        })
        .expect("non-empty signature")
    }

    pub fn lambda2<A: OperandArg, B: OperandArg>(
        name: impl Into<String>,
        f: impl Fn(A, B) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, vec![A::operand_type(), B::operand_type()], move |ops| {
            f(
                A::from_value(&ops[0]).expect("operand checked against signature"),
                B::from_value(&ops[1]).expect("operand checked against signature"),
            )
        })
        .expect("non-empty signature")
    }

    pub fn lambda3<A: OperandArg, B: OperandArg, C: OperandArg>(
        name: impl Into<String>,
        f: impl Fn(A, B, C) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(
            name,
            vec![A::operand_type(), B::operand_type(), C::operand_type()],
            move |ops| {
                f(
                    A::from_value(&ops[0]).expect("operand checked against signature"),
                    B::from_value(&ops[1]).expect("operand checked against signature"),
                    C::from_value(&ops[2]).expect("operand checked against signature"),
                )
            },
        )
        .expect("non-empty signature")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn signature(&self) -> &[OperandType] {
        &self.signature
    }

    pub fn arity(&self) -> usize {
        self.signature.len()
    }

    /// Applies the instruction after checking operand count and types.
    pub fn execute(&self, operands: &[Value]) -> Result<f64, InstructionError> {
        let matches = operands.len() == self.signature.len()
            && operands
                .iter()
                .zip(&self.signature)
                .all(|(v, t)| v.operand_type() == *t);
        if !matches {
            let join = |types: Vec<String>| types.join(", ");
            return Err(InstructionError::SignatureMismatch {
                name: self.name.clone(),
                expected: join(self.signature.iter().map(|t| t.to_string()).collect()),
                got: join(operands.iter().map(|v| v.operand_type().to_string()).collect()),
            });
        }
        Ok((self.func)(operands))
    }
}

/// Scalar element types usable inside array operands.
pub trait Element: Copy + Default {
    const KIND: ElementKind;
    fn elements(data: &NativeData) -> Option<&[Self]>;
}

impl Element for f64 {
    const KIND: ElementKind = ElementKind::F64;
    fn elements(data: &NativeData) -> Option<&[Self]> {
        match data {
            NativeData::F64(v) => Some(v),
            _ => None,
        }
    }
}

impl Element for i64 {
    const KIND: ElementKind = ElementKind::I64;
    fn elements(data: &NativeData) -> Option<&[Self]> {
        match data {
            NativeData::I64(v) => Some(v),
            _ => None,
        }
    }
}

impl Element for i8 {
    const KIND: ElementKind = ElementKind::I8;
    fn elements(data: &NativeData) -> Option<&[Self]> {
        match data {
            NativeData::I8(v) => Some(v),
            _ => None,
        }
    }
}

/// Rust types that can be instruction operands.
pub trait OperandArg: Sized {
    fn operand_type() -> OperandType;
    fn from_value(value: &Value) -> Option<Self>;
}

macro_rules! scalar_operand {
    ($t:ty, $variant:ident) => {
        impl OperandArg for $t {
            fn operand_type() -> OperandType {
                OperandType::scalar(<$t as Element>::KIND)
            }
            fn from_value(value: &Value) -> Option<Self> {
                match value {
                    Value::$variant(v) => Some(*v),
                    _ => None,
                }
            }
        }
    };
}

scalar_operand!(f64, F64);
scalar_operand!(i64, I64);
scalar_operand!(i8, I8);

impl<T: Element, const N: usize> OperandArg for [T; N] {
    fn operand_type() -> OperandType {
        OperandType::vector(T::KIND, N)
    }

    fn from_value(value: &Value) -> Option<Self> {
        match value {
            Value::Array {
                shape: Shape::Vector(n),
                data,
            } if *n == N => T::elements(data)?.try_into().ok(),
            _ => None,
        }
    }
}

impl<T: Element, const H: usize, const W: usize> OperandArg for [[T; W]; H] {
    fn operand_type() -> OperandType {
        OperandType::matrix(T::KIND, H, W)
    }

    fn from_value(value: &Value) -> Option<Self> {
        match value {
            Value::Array {
                shape: Shape::Matrix(h, w),
                data,
            } if *h == H && *w == W => {
                let flat = T::elements(data)?;
                let mut out = [[T::default(); W]; H];
                for (r, row) in out.iter_mut().enumerate() {
                    row.copy_from_slice(&flat[r * W..(r + 1) * W]);
                }
                Some(out)
            }
            _ => None,
        }
    }
}

/// Ordered, non-empty list of instructions. Instruction `i` has id `i`.
#[derive(Clone, Debug)]
pub struct InstructionSet {
    name: String,
    instructions: Vec<Instruction>,
}

impl InstructionSet {
    pub fn new(
        name: impl Into<String>,
        instructions: Vec<Instruction>,
    ) -> Result<Self, InstructionError> {
        let name = name.into();
        if instructions.is_empty() {
            return Err(InstructionError::EmptySet(name));
        }
        Ok(Self { name, instructions })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Instruction> {
        self.instructions.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Instruction> {
        self.instructions.iter()
    }

    /// Largest arity among the instructions.
    pub fn max_arity(&self) -> usize {
        self.instructions.iter().map(Instruction::arity).max().unwrap_or(0)
    }
}

/// `res = (a < b) ? -a : a`
pub fn conditional(a: f64, b: f64) -> f64 {
    if a < b {
        -a
    } else {
        a
    }
}

fn arithmetic() -> Vec<Instruction> {
    vec![
        Instruction::lambda2("add", |a: f64, b: f64| a + b),
        Instruction::lambda2("sub", |a: f64, b: f64| a - b),
        Instruction::lambda2("mul", |a: f64, b: f64| a * b),
        Instruction::lambda2("div", |a: f64, b: f64| a / b),
    ]
}

/// `{+, -, ×, ÷, <}` over `f64` scalars.
pub fn build_iset_simple() -> InstructionSet {
    let mut instructions = arithmetic();
    instructions.push(Instruction::lambda2("cond", conditional));
    InstructionSet::new("simple", instructions).expect("non-empty")
}

/// `{+, -, ×, ÷, cos, ln, exp, <}` over `f64` scalars.
pub fn build_iset_complex() -> InstructionSet {
    let mut instructions = arithmetic();
    instructions.push(Instruction::lambda1("cos", f64::cos));
    instructions.push(Instruction::lambda1("ln", f64::ln));
    instructions.push(Instruction::lambda1("exp", f64::exp));
    instructions.push(Instruction::lambda2("cond", conditional));
    InstructionSet::new("complex", instructions).expect("non-empty")
}

type SetFactory = Box<dyn Fn() -> InstructionSet + Send + Sync>;

/// Named instruction sets available to configs, the CLI, and graph import.
pub struct InstructionSetRegistry {
    factories: BTreeMap<String, SetFactory>,
}

impl Default for InstructionSetRegistry {
    fn default() -> Self {
        let mut registry = Self {
            factories: BTreeMap::new(),
        };
        registry.register("simple", build_iset_simple);
        registry.register("complex", build_iset_complex);
        registry
    }
}

impl InstructionSetRegistry {
    /// Adds or replaces a named set.
    pub fn register(
        &mut self,
        name: impl Into<String>,
        factory: impl Fn() -> InstructionSet + Send + Sync + 'static,
    ) {
        self.factories.insert(name.into(), Box::new(factory));
    }

    pub fn build(&self, name: &str) -> Result<InstructionSet, InstructionError> {
        self.factories
            .get(name)
            .map(|f| f())
            .ok_or_else(|| InstructionError::UnknownSet(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }
}
