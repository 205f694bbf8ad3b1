use std::fmt::Debug;
use std::path::PathBuf;

use chrono::NaiveDate;

use choreo_core::{wire, ErrorKind, Portable};
use choreo_protocols::kvs::{KvRequest, KvResponse};
use choreo_protocols::tictactoe::{Board, Mark};
use choreo_protocols::{Purchase, PurchaseError, Quote};

fn fixture(name: &str) -> Vec<u8> {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", "wire", name]
        .iter()
        .collect();
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn golden<V: Portable + PartialEq + Debug>(name: &str, value: V) {
    let expected = fixture(name);
    assert_eq!(wire::encode(&value).unwrap(), expected, "{name}: encoding drifted");
    assert_eq!(wire::decode::<V>(&expected).unwrap(), value, "{name}: decoding drifted");
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

#[test]
fn commerce_messages() {
    golden("quote_price.json", Quote::Price(80));
    golden("quote_unknown.json", Quote::UnknownTitle);
    golden("date.json", date(2024, 3, 1));
    golden::<Purchase>("purchase_bought.json", Ok(Some(date(2024, 4, 15))));
    golden::<Purchase>("purchase_declined.json", Ok(None));
    golden::<Purchase>("purchase_unknown.json", Err(PurchaseError::UnknownTitle("Dune".into())));
}

#[test]
fn kvs_messages() {
    golden("kv_get.json", KvRequest::get("k"));
    golden("kv_put.json", KvRequest::put("k", "v"));
    golden("kv_value.json", KvResponse::Value(Some("v".into())));
    golden("kv_missing.json", KvResponse::Value(None));
    golden("kv_ack.json", KvResponse::Ack);
}

#[test]
fn tictactoe_messages() {
    let board = Board::empty()
        .play(0, Mark::X)
        .and_then(|b| b.play(1, Mark::O))
        .and_then(|b| b.play(4, Mark::X))
        .unwrap();
    golden("board.json", board);
    golden::<Result<Board, String>>("move_ok.json", Ok(Board::empty().play(0, Mark::X).unwrap()));
    golden::<Result<Board, String>>("move_err.json", Err("cell 4 is already taken".into()));
}

#[test]
fn malformed_boards_are_rejected() {
    for bad in [&br#""XO""#[..], br#""XXXXXXXXX""#, br#""XO..Z....""#, br#""OO.......""#] {
        let err = wire::decode::<Board>(bad).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::WireFormat, "{}", String::from_utf8_lossy(bad));
    }
}
