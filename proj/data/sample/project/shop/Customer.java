package shop;

public class Customer {
    private final String email;
    private Cart cart = new Cart();

    public Customer(String email) {
        this.email = email;
    }

    public String getEmail() {
        return email;
    }

    public Cart getCart() {
        return cart;
    }
}
