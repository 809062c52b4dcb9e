use crate::data::{NativeData, NativeShape, StateSource};
use crate::parallel::Rng;

use super::{EnvError, LearningEnvironment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(i8)]
pub enum Cell {
    Empty = 0,
    Agent = 1,
    Opponent = 2,
}

const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

pub const ILLEGAL_MOVE_SCORE: f64 = -10.0;

/// Tic-tac-toe against a uniformly random opponent. The agent moves first;
/// actions are cell indices in row-major order. The state is one 3×3 `i8`
/// source holding [`Cell`] values.
///
/// Final scores: win +1, draw 0, loss -1, illegal move -10.
#[derive(Clone, Debug)]
pub struct TicTacToeEnv {
    board: [Cell; 9],
    opponent: Rng,
    score: f64,
    terminal: bool,
    sources: Vec<StateSource>,
}

impl Default for TicTacToeEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl TicTacToeEnv {
    pub fn new() -> Self {
        Self {
            board: [Cell::Empty; 9],
            opponent: Rng::new(0),
            score: 0.0,
            terminal: false,
            sources: vec![StateSource::new(NativeShape::Grid(3, 3), NativeData::I8(vec![0; 9]))
                .expect("3x3 board")],
        }
    }

    pub fn board(&self) -> &[Cell; 9] {
        &self.board
    }

    /// Replaces the board (for tests and scripted openings).
    pub fn set_board(&mut self, board: [Cell; 9]) {
        self.board = board;
        self.publish();
    }

    fn publish(&mut self) {
        if let NativeData::I8(v) = self.sources[0].native_mut() {
            for (dst, cell) in v.iter_mut().zip(self.board) {
                *dst = cell as i8;
            }
        }
    }

    fn wins(&self, who: Cell) -> bool {
        LINES
            .iter()
            .any(|line| line.iter().all(|&i| self.board[i] == who))
    }

    fn free_cells(&self) -> Vec<usize> {
        (0..9).filter(|&i| self.board[i] == Cell::Empty).collect()
    }

    fn finish(&mut self, score: f64) {
        self.score = score;
        self.terminal = true;
    }
}

impl LearningEnvironment for TicTacToeEnv {
    fn name(&self) -> &str {
        "tictactoe"
    }

    fn action_count(&self) -> usize {
        9
    }

    fn reset(&mut self, seed: u64) {
        self.board = [Cell::Empty; 9];
        self.opponent = Rng::new(seed);
        self.score = 0.0;
        self.terminal = false;
        self.publish();
    }

    fn step(&mut self, action: usize) -> Result<(), EnvError> {
        if self.terminal {
            return Err(EnvError::Terminal);
        }
        if action >= 9 {
            return Err(EnvError::InvalidAction { action, count: 9 });
        }
        if self.board[action] != Cell::Empty {
            self.finish(ILLEGAL_MOVE_SCORE);
            return Ok(());
        }
        self.board[action] = Cell::Agent;
        if self.wins(Cell::Agent) {
            self.finish(1.0);
        } else {
            let free = self.free_cells();
            match self.opponent.pick(&free) {
                None => self.finish(0.0),
                Some(&cell) => {
                    self.board[cell] = Cell::Opponent;
                    if self.wins(Cell::Opponent) {
                        self.finish(-1.0);
                    } else if self.free_cells().is_empty() {
                        self.finish(0.0);
                    }
                }
            }
        }
        self.publish();
        Ok(())
    }

    fn score(&self) -> f64 {
        self.score
    }

    fn is_terminal(&self) -> bool {
        self.terminal
    }

    fn data_sources(&self) -> &[StateSource] {
        &self.sources
    }

    fn clone_env(&self) -> Box<dyn LearningEnvironment> {
        Box::new(self.clone())
    }

    fn horizon(&self) -> usize {
        // the agent plays at most 5 of the 9 cells
        5
    }

    fn min_score(&self) -> f64 {
        ILLEGAL_MOVE_SCORE
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DataSource, OperandType, Value};
    use Cell::{Agent as X, Empty as E, Opponent as O};

    #[test]
    fn completing_a_row_wins() {
        let mut env = TicTacToeEnv::new();
        env.reset(1);
        env.set_board([X, X, E, O, O, E, E, E, E]);
        env.step(2).unwrap();
        assert!(env.is_terminal());
        assert_eq!(env.score(), 1.0);
    }

    #[test]
    fn occupied_cell_is_penalized() {
        let mut env = TicTacToeEnv::new();
        env.reset(1);
        env.step(4).unwrap();
        if !env.is_terminal() {
            env.step(4).unwrap();
        }
        assert!(env.is_terminal());
        assert_eq!(env.score(), ILLEGAL_MOVE_SCORE);
        assert_eq!(env.step(0), Err(EnvError::Terminal));
    }

    #[test]
    fn full_board_without_line_is_a_draw() {
        let mut env = TicTacToeEnv::new();
        env.reset(1);
        // X O X / X O O / O X _  ; agent fills 8 -> no line
        env.set_board([X, O, X, X, O, O, O, X, E]);
        env.step(8).unwrap();
        assert!(env.is_terminal());
        assert_eq!(env.score(), 0.0);
    }

    #[test]
    fn opponent_can_win() {
        // Opponent has a free winning cell; play until it happens for some seed.
        let found = (0..64).any(|seed| {
            let mut env = TicTacToeEnv::new();
            env.reset(seed);
            env.set_board([O, O, E, X, E, E, X, E, E]);
            env.step(8).unwrap();
            env.is_terminal() && env.score() == -1.0
        });
        assert!(found);
    }

    #[test]
    fn opponent_is_seeded() {
        let play = |seed| {
            let mut env = TicTacToeEnv::new();
            env.reset(seed);
            env.step(0).unwrap();
            *env.board()
        };
        assert_eq!(play(5), play(5));
        assert!((0..20).map(play).collect::<std::collections::HashSet<_>>().len() > 1);
    }

    #[test]
    fn board_is_exposed_as_int8_grid() {
        let mut env = TicTacToeEnv::new();
        env.reset(0);
        env.set_board([X, E, E, E, O, E, E, E, E]);
        let src = &env.data_sources()[0];
        assert_eq!(src.get_data(&OperandType::I8, 4).unwrap(), Value::I8(2));
        assert_eq!(src.get_data(&OperandType::F64, 0).unwrap(), Value::F64(1.0));
    }
}
