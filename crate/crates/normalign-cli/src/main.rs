fn main() {
    println!("normalign");
}
