//! Tic-tac-toe, played locally or between two locations.
//!
//! The distributed game is the local game loop with each move computed
//! where the moving player lives and the new board broadcast to both.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use choreo_core::{
    plain_local_view, ChoreoError, ChoreoOp, Choreography, Located, Location, LocationSet,
    Placement, Result, Unwrapper,
};

pub fn player_x() -> Location {
    Location::named("playerX")
}

pub fn player_o() -> Location {
    Location::named("playerO")
}

pub fn locations() -> LocationSet {
    LocationSet::named(&["playerX", "playerO"])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mark {
    X,
    O,
}

impl Mark {
    pub fn other(self) -> Mark {
        match self {
            Mark::X => Mark::O,
            Mark::O => Mark::X,
        }
    }

    fn symbol(self) -> char {
        match self {
            Mark::X => 'X',
            Mark::O => 'O',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameStatus {
    InProgress,
    Won(Mark),
    Draw,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IllegalMove {
    OutOfRange(usize),
    Occupied(usize),
    NotYourTurn(Mark),
    GameOver(GameStatus),
}

impl fmt::Display for IllegalMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IllegalMove::OutOfRange(c) => write!(f, "cell {c} is off the board"),
            IllegalMove::Occupied(c) => write!(f, "cell {c} is already taken"),
            IllegalMove::NotYourTurn(m) => write!(f, "it is not {m:?}'s turn"),
            IllegalMove::GameOver(s) => write!(f, "the game is over ({s:?})"),
        }
    }
}

impl std::error::Error for IllegalMove {}

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

/// A 3×3 board, cells numbered 0–8 row by row.
///
/// On the wire a board is a 9-character string of `X`, `O` and `.`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Board {
    cells: [Option<Mark>; 9],
}

impl Board {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn cell(&self, index: usize) -> Option<Mark> {
        self.cells[index]
    }

    fn count(&self, mark: Mark) -> usize {
        self.cells.iter().filter(|c| **c == Some(mark)).count()
    }

    /// X moves first.
    pub fn to_move(&self) -> Mark {
        if self.count(Mark::X) == self.count(Mark::O) {
            Mark::X
        } else {
            Mark::O
        }
    }

    pub fn empty_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..9).filter(|i| self.cells[*i].is_none())
    }

    pub fn status(&self) -> GameStatus {
        for line in LINES {
            if let Some(mark) = self.cells[line[0]] {
                if line.iter().all(|i| self.cells[*i] == Some(mark)) {
                    return GameStatus::Won(mark);
                }
            }
        }
        if self.cells.iter().all(Option::is_some) {
            GameStatus::Draw
        } else {
            GameStatus::InProgress
        }
    }

    pub fn play(&self, cell: usize, mark: Mark) -> std::result::Result<Board, IllegalMove> {
        let status = self.status();
        if status != GameStatus::InProgress {
            return Err(IllegalMove::GameOver(status));
        }
        if mark != self.to_move() {
            return Err(IllegalMove::NotYourTurn(mark));
        }
        match self.cells.get(cell) {
            None => Err(IllegalMove::OutOfRange(cell)),
            Some(Some(_)) => Err(IllegalMove::Occupied(cell)),
            Some(None) => {
                let mut next = *self;
                next.cells[cell] = Some(mark);
                Ok(next)
            }
        }
    }

    /// The cell that turns `self` into `next` with one legal move, if any.
    pub fn move_to(&self, next: &Board) -> Option<usize> {
        let cell = self.empty_cells().find(|i| next.cells[*i].is_some())?;
        (self.play(cell, self.to_move()).ok()? == *next).then_some(cell)
    }
}

impl From<Board> for String {
    fn from(board: Board) -> String {
        board
            .cells
            .iter()
            .map(|c| c.map_or('.', Mark::symbol))
            .collect()
    }
}

impl TryFrom<String> for Board {
    type Error = String;

    fn try_from(text: String) -> std::result::Result<Self, String> {
        let chars: Vec<char> = text.chars().collect();
        if chars.len() != 9 {
            return Err(format!("a board has 9 cells, got {:?}", text));
        }
        let mut board = Board::empty();
        for (i, c) in chars.into_iter().enumerate() {
            board.cells[i] = match c {
                '.' => None,
                'X' => Some(Mark::X),
                'O' => Some(Mark::O),
                other => return Err(format!("unknown cell {other:?}")),
            };
        }
        let (x, o) = (board.count(Mark::X), board.count(Mark::O));
        if x != o && x != o + 1 {
            return Err(format!("{x} X marks against {o} O marks"));
        }
        Ok(board)
    }
}

impl fmt::Display for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = String::from(*self);
        for (i, row) in text.as_bytes().chunks(3).enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}", std::str::from_utf8(row).expect("ascii"))?;
        }
        Ok(())
    }
}

/// Picks a move for `mark` on an in-progress board.
pub trait Brain {
    fn choose(&self, board: &Board, mark: Mark) -> usize;
}

impl<B: Brain + ?Sized> Brain for &B {
    fn choose(&self, board: &Board, mark: Mark) -> usize {
        (**self).choose(board, mark)
    }
}

/// Takes the lowest-numbered free cell.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstEmpty;

impl Brain for FirstEmpty {
    fn choose(&self, board: &Board, _mark: Mark) -> usize {
        board.empty_cells().next().unwrap_or(0)
    }
}

/// Perfect play; among equally good moves, the lowest-numbered cell.
#[derive(Debug, Clone, Copy, Default)]
pub struct Minimax;

fn memo() -> &'static Mutex<HashMap<Board, i8>> {
    static MEMO: OnceLock<Mutex<HashMap<Board, i8>>> = OnceLock::new();
    MEMO.get_or_init(Mutex::default)
}

/// Value of `board` for the player to move: 1 win, 0 draw, -1 loss.
fn negamax(board: &Board, memo: &mut HashMap<Board, i8>) -> i8 {
    if let Some(v) = memo.get(board) {
        return *v;
    }
    let mover = board.to_move();
    let value = match board.status() {
        GameStatus::Won(m) if m == mover => 1,
        GameStatus::Won(_) => -1,
        GameStatus::Draw => 0,
        GameStatus::InProgress => board
            .empty_cells()
            .map(|c| -negamax(&board.play(c, mover).expect("free cell"), memo))
            .max()
            .expect("in-progress board has a free cell"),
    };
    memo.insert(*board, value);
    value
}

impl Minimax {
    pub fn value(board: &Board) -> i8 {
        negamax(board, &mut memo().lock().unwrap_or_else(|e| e.into_inner()))
    }
}

impl Brain for Minimax {
    fn choose(&self, board: &Board, mark: Mark) -> usize {
        let mut memo = memo().lock().unwrap_or_else(|e| e.into_inner());
        let mut best = None;
        for cell in board.empty_cells() {
            let Ok(next) = board.play(cell, mark) else {
                continue;
            };
            let value = -negamax(&next, &mut memo);
            if best.is_none_or(|(v, _)| value > v) {
                best = Some((value, cell));
            }
        }
        best.map_or(0, |(_, cell)| cell)
    }
}

/// Wins if it can, blocks if it must, then prefers center, corners, edges.
#[derive(Debug, Clone, Copy, Default)]
pub struct Tactician;

impl Tactician {
    fn completing(board: &Board, mark: Mark) -> Option<usize> {
        board.empty_cells().find(|c| {
            let mut trial = *board;
            trial.cells[*c] = Some(mark);
            trial.status() == GameStatus::Won(mark)
        })
    }
}

impl Brain for Tactician {
    fn choose(&self, board: &Board, mark: Mark) -> usize {
        Self::completing(board, mark)
            .or_else(|| Self::completing(board, mark.other()))
            .or_else(|| [4, 0, 2, 6, 8, 1, 3, 5, 7].into_iter().find(|c| board.cell(*c).is_none()))
            .unwrap_or(0)
    }
}

/// Plays the listed cells in order, then falls back to [`FirstEmpty`].
/// Handy for forcing particular games, including illegal moves.
#[derive(Debug, Clone, Default)]
pub struct Scripted(pub Vec<usize>);

impl Brain for Scripted {
    fn choose(&self, board: &Board, mark: Mark) -> usize {
        self.0
            .get(board.count(mark))
            .copied()
            .unwrap_or_else(|| FirstEmpty.choose(board, mark))
    }
}

/// The bundled brains, selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BrainKind {
    FirstEmpty,
    Minimax,
    Tactician,
}

impl Brain for BrainKind {
    fn choose(&self, board: &Board, mark: Mark) -> usize {
        match self {
            BrainKind::FirstEmpty => FirstEmpty.choose(board, mark),
            BrainKind::Minimax => Minimax.choose(board, mark),
            BrainKind::Tactician => Tactician.choose(board, mark),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRecord {
    pub status: GameStatus,
    pub moves: Vec<usize>,
    pub board: Board,
}

plain_local_view!(GameRecord, GameStatus, Board);

/// Both players on one machine.
pub fn play_local(
    brain_x: &impl Brain,
    brain_o: &impl Brain,
) -> std::result::Result<GameRecord, IllegalMove> {
    let mut board = Board::empty();
    let mut moves = Vec::new();
    loop {
        let status = board.status();
        if status != GameStatus::InProgress {
            return Ok(GameRecord {
                status,
                moves,
                board,
            });
        }
        let mark = board.to_move();
        let cell = match mark {
            Mark::X => brain_x.choose(&board, mark),
            Mark::O => brain_o.choose(&board, mark),
        };
        board = board.play(cell, mark)?;
        moves.push(cell);
    }
}

pub struct TicTacToe<BX, BO> {
    pub brain_x: Located<BX>,
    pub brain_o: Located<BO>,
}

impl<BX, BO> TicTacToe<BX, BO> {
    pub fn place(
        p: &impl Placement,
        brain_x: impl FnOnce() -> BX,
        brain_o: impl FnOnce() -> BO,
    ) -> Self {
        Self {
            brain_x: p.place(player_x(), brain_x),
            brain_o: p.place(player_o(), brain_o),
        }
    }
}

type MoveResult = std::result::Result<Board, String>;

fn turn<B: Brain>(un: Unwrapper, brain: &Located<B>, board: &Board, mark: Mark) -> Result<MoveResult> {
    let cell = un.unwrap(brain)?.choose(board, mark);
    Ok(board.play(cell, mark).map_err(|e| e.to_string()))
}

impl<BX: Brain, BO: Brain> Choreography<GameRecord> for TicTacToe<BX, BO> {
    fn location_set(&self) -> LocationSet {
        locations()
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<GameRecord> {
        let mut board = Board::empty();
        let mut moves = Vec::new();
        loop {
            let status = board.status();
            if status != GameStatus::InProgress {
                return Ok(GameRecord {
                    status,
                    moves,
                    board,
                });
            }
            let mark = board.to_move();
            let (player, next) = match mark {
                Mark::X => (
                    player_x(),
                    op.locally(player_x(), |un| turn(un, &self.brain_x, &board, mark))?,
                ),
                Mark::O => (
                    player_o(),
                    op.locally(player_o(), |un| turn(un, &self.brain_o, &board, mark))?,
                ),
            };
            let next = op
                .broadcast(player, &next)?
                .map_err(|e| ChoreoError::Protocol(format!("`{player}` made an illegal move: {e}")))?;
            let cell = board.move_to(&next).ok_or_else(|| {
                ChoreoError::Protocol(format!("`{player}` sent an unreachable board {}", String::from(next)))
            })?;
            moves.push(cell);
            board = next;
        }
    }
}
