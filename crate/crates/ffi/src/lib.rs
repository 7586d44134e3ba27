#[no_mangle]
pub extern "C" fn vbs_placeholder() -> i32 { 0 }
