//! Straight-line register-machine programs.
//!
//! A [`Program`] is a list of [`Line`]s. Each line reads its operands through
//! the data sources (registers first, then the environment state), applies one
//! instruction, and stores the `f64` result in a destination register. The
//! value left in register 0 is the program's bid.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::data::{Address, DataContext, DataError, RegisterFile, Snapshot, SourceLayout, StateSource, Value};
use crate::instructions::{InstructionError, InstructionSet};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Line {
    pub instruction: usize,
    pub destination: usize,
    pub operands: Vec<Address>,
}

impl Line {
    pub fn new(instruction: usize, destination: usize, operands: Vec<Address>) -> Self {
        Self {
            instruction,
            destination,
            operands,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Program {
    lines: Vec<Line>,
}

impl Program {
    pub fn new(lines: Vec<Line>) -> Self {
        Self { lines }
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn lines_mut(&mut self) -> &mut Vec<Line> {
        &mut self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProgramError {
    #[error("line {line}: {source}")]
    Data { line: usize, source: DataError },
    #[error("line {line}: {source}")]
    Instruction {
        line: usize,
        source: InstructionError,
    },
    #[error("line {line}: unknown instruction index {index}")]
    UnknownInstruction { line: usize, index: usize },
    #[error("program has no usable instruction for this data layout")]
    NoUsableInstruction,
}

/// What programs of one graph share: the instruction set and the data layout.
#[derive(Debug)]
pub struct ProgramContext {
    instructions: Arc<InstructionSet>,
    layout: SourceLayout,
    usable: Vec<usize>,
}

impl ProgramContext {
    /// Fails when no instruction can draw every operand from `layout`.
    pub fn new(instructions: Arc<InstructionSet>, layout: SourceLayout) -> Result<Self, ProgramError> {
        let usable: Vec<usize> = instructions
            .iter()
            .enumerate()
            .filter(|(_, instr)| {
                instr
                    .signature()
                    .iter()
                    .all(|ty| layout.total_addressable(ty) > 0)
            })
            .map(|(i, _)| i)
            .collect();
        if usable.is_empty() {
            return Err(ProgramError::NoUsableInstruction);
        }
        Ok(Self {
            instructions,
            layout,
            usable,
        })
    }

    pub fn instructions(&self) -> &InstructionSet {
        &self.instructions
    }

    pub fn instruction_set(&self) -> &Arc<InstructionSet> {
        &self.instructions
    }

    pub fn layout(&self) -> &SourceLayout {
        &self.layout
    }

    pub fn register_count(&self) -> usize {
        self.layout.register_count()
    }

    /// Instruction indices whose operand types the layout can serve.
    pub fn usable_instructions(&self) -> &[usize] {
        &self.usable
    }
}

/// Reusable execution state: a register file and an operand buffer.
///
/// One executor per thread; it is reset at the start of every program run.
#[derive(Debug)]
pub struct Executor {
    registers: RegisterFile,
    operands: Vec<Value>,
}

impl Executor {
    pub fn new(register_count: usize) -> Self {
        Self {
            registers: RegisterFile::new(register_count),
            operands: Vec::with_capacity(4),
        }
    }

    pub fn for_context(ctx: &ProgramContext) -> Self {
        Self::new(ctx.register_count())
    }

    pub fn registers(&self) -> &RegisterFile {
        &self.registers
    }

    /// Runs `program` on `environment` with zeroed registers and returns register 0.
    pub fn execute(
        &mut self,
        ctx: &ProgramContext,
        program: &Program,
        environment: &[StateSource],
    ) -> Result<f64, ProgramError> {
        self.registers.reset();
        let instructions = ctx.instructions();
        for (index, line) in program.lines.iter().enumerate() {
            let instruction = instructions
                .get(line.instruction)
                .ok_or(ProgramError::UnknownInstruction {
                    line: index,
                    index: line.instruction,
                })?;
            self.operands.clear();
            {
                let data = DataContext {
                    registers: &mut self.registers,
                    environment,
                };
                for (ty, address) in instruction.signature().iter().zip(&line.operands) {
                    let operand = data
                        .get_data(address, ty)
                        .map_err(|source| ProgramError::Data { line: index, source })?;
                    self.operands.push(operand);
                }
            }
            let result = instruction
                .execute(&self.operands)
                .map_err(|source| ProgramError::Instruction { line: index, source })?;
            self.registers
                .set_register(line.destination, result)
                .map_err(|source| ProgramError::Data { line: index, source })?;
        }
        Ok(self.registers.result())
    }

    /// One bid per snapshot, each from a fresh register file.
    pub fn bids_on(
        &mut self,
        ctx: &ProgramContext,
        program: &Program,
        snapshots: &[Snapshot],
    ) -> Result<Vec<f64>, ProgramError> {
        snapshots
            .iter()
            .map(|snapshot| self.execute(ctx, program, snapshot))
            .collect()
    }
}

/// Convenience wrapper allocating a one-shot executor.
pub fn execute_program(
    ctx: &ProgramContext,
    program: &Program,
    environment: &[StateSource],
) -> Result<f64, ProgramError> {
    Executor::for_context(ctx).execute(ctx, program, environment)
}

/// A broken program invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    EmptyProgram,
    TooLong { length: usize, max: usize },
    UnknownInstruction { line: usize, index: usize },
    DestinationOutOfRange { line: usize, register: usize },
    ArityMismatch { line: usize, expected: usize, found: usize },
    AddressOutOfRange { line: usize, operand: usize, address: Address },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyProgram => write!(f, "empty program"),
            Violation::TooLong { length, max } => {
                write!(f, "program has {length} lines, more than the maximum {max}")
            }
            Violation::UnknownInstruction { line, index } => {
                write!(f, "line {line}: unknown instruction index {index}")
            }
            Violation::DestinationOutOfRange { line, register } => {
                write!(f, "line {line}: destination register {register} out of range")
            }
            Violation::ArityMismatch {
                line,
                expected,
                found,
            } => write!(f, "line {line}: expected {expected} operands, found {found}"),
            Violation::AddressOutOfRange {
                line,
                operand,
                address,
            } => write!(
                f,
                "line {line}: operand {operand} address out of range ({}:{})",
                address.source, address.location
            ),
        }
    }
}

/// Lists every violated line or program invariant; empty means valid.
pub fn validate_program(
    program: &Program,
    ctx: &ProgramContext,
    max_length: Option<usize>,
) -> Vec<Violation> {
    let mut violations = Vec::new();
    if program.is_empty() {
        violations.push(Violation::EmptyProgram);
    }
    if let Some(max) = max_length {
        if program.len() > max {
            violations.push(Violation::TooLong {
                length: program.len(),
                max,
            });
        }
    }
    for (index, line) in program.lines.iter().enumerate() {
        if line.destination >= ctx.register_count() {
            violations.push(Violation::DestinationOutOfRange {
                line: index,
                register: line.destination,
            });
        }
        let Some(instruction) = ctx.instructions().get(line.instruction) else {
            violations.push(Violation::UnknownInstruction {
                line: index,
                index: line.instruction,
            });
            continue;
        };
        if instruction.arity() != line.operands.len() {
            violations.push(Violation::ArityMismatch {
                line: index,
                expected: instruction.arity(),
                found: line.operands.len(),
            });
        }
        for (operand, (ty, address)) in instruction.signature().iter().zip(&line.operands).enumerate() {
            if !ctx.layout().is_valid(address, ty) {
                violations.push(Violation::AddressOutOfRange {
                    line: index,
                    operand,
                    address: *address,
                });
            }
        }
    }
    violations
}
